"""Split-step Fourier reference simulator for amplified WDM links."""

from .alpha import AlphaFit, StepSizeWarning, estimate_alpha_nl, power_dependent_alpha, span_averaged_alpha
from .amplifier import CG, COP, AmplifierModel, amplify, ase_psd
from .fiber import FiberPhysical, StepControl, apply_dispersion, propagate_span, step_lengths
from .field import ConfigError, SampledField, read_field, write_field
from .link import LinkPoint, LinkScenario, fit_alpha, simulate_link, simulate_point
from .receiver import SnrEstimate, receive_tributary
from .transmitter import TransmitterConfig, generate_multiplex

__all__ = [
    "AlphaFit", "AmplifierModel", "CG", "COP", "ConfigError", "FiberPhysical", "LinkPoint",
    "LinkScenario", "SampledField", "SnrEstimate", "StepControl", "StepSizeWarning",
    "TransmitterConfig", "amplify", "apply_dispersion", "ase_psd", "estimate_alpha_nl",
    "fit_alpha", "generate_multiplex", "power_dependent_alpha", "propagate_span",
    "read_field", "receive_tributary", "simulate_link", "simulate_point",
    "span_averaged_alpha", "step_lengths", "write_field",
]
