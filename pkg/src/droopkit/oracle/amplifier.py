"""Lumped amplifiers in constant-output-power or constant-gain mode."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.constants as const
import scipy.fft as sfft

from .field import ConfigError, SampledField

COP = "cop"
CG = "cg"


@dataclass(frozen=True)
class AmplifierModel:
    """Amplifier with input-referred ASE of total PSD h*nu*F (both polarizations).

    ``output_power`` (mW) applies to COP mode, ``gain`` (linear) to CG mode.
    ``amp_bandwidth`` limits the ASE band (None: whole simulated band).
    ``inband_filter`` is the brick-wall passband width in Hz applied to the
    amplifier output, or None for no filter.
    """

    mode: str
    noise_figure: float
    output_power: Optional[float] = None
    gain: Optional[float] = None
    amp_bandwidth: Optional[float] = None
    inband_filter: Optional[float] = None
    ase: bool = True

    def __post_init__(self):
        if self.mode not in (COP, CG):
            raise ConfigError(f"amplifier mode must be 'cop' or 'cg', got {self.mode!r}")
        if self.mode == COP and not (self.output_power and self.output_power > 0):
            raise ConfigError("COP amplifier needs a positive output_power")
        if self.mode == CG and not (self.gain and self.gain > 1):
            raise ConfigError("CG amplifier needs gain > 1")
        if self.noise_figure < 1:
            raise ConfigError("noise figure must be >= 1 (linear)")


def ase_psd(noise_figure: float, center_frequency: float) -> float:
    """Input-referred ASE PSD over both polarizations, mW/Hz."""
    return const.h * center_frequency * noise_figure * 1e3


def band_mask(field: SampledField, width: Optional[float]) -> Optional[np.ndarray]:
    if width is None or width >= field.sample_rate:
        return None
    return np.abs(field.frequencies()) <= width / 2


def ase_noise(field: SampledField, noise_figure: float, bandwidth: Optional[float],
              rng: np.random.Generator) -> np.ndarray:
    """Circular white Gaussian noise, split equally over the polarizations."""
    var = ase_psd(noise_figure, field.center_frequency) / 2 * field.sample_rate
    noise = (rng.standard_normal((2, field.n)) + 1j * rng.standard_normal((2, field.n)))
    noise *= np.sqrt(var / 2)
    mask = band_mask(field, bandwidth)
    if mask is not None:
        noise = sfft.ifft(sfft.fft(noise, axis=-1) * mask, axis=-1)
    return noise


def amplify(field: SampledField, amp: AmplifierModel, rng: np.random.Generator) -> SampledField:
    x = field.samples
    if amp.ase:
        x = x + ase_noise(field, amp.noise_figure, amp.amp_bandwidth, rng)
    mask = band_mask(field, amp.inband_filter)
    if mask is not None:
        x = sfft.ifft(sfft.fft(x, axis=-1) * mask, axis=-1)
    out = field.with_samples(x)
    if amp.mode == COP:
        gain = amp.output_power / out.power()
    else:
        gain = amp.gain
    out.samples = out.samples * np.sqrt(gain)
    return out
