"""NLI coefficient estimation from ASE-free end-to-end runs."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .receiver import SnrEstimate

FLATNESS_DB = 0.3


class StepSizeWarning(UserWarning):
    """The low-power NLI coefficient curve is not flat; steps may be too long."""


def span_averaged_alpha(v_nli: float, power: float, n: int) -> float:
    """Invert V = (1 + alpha P^2)^N - 1 for alpha (mW^-2)."""
    return math.expm1(math.log1p(v_nli) / n) / power ** 2


def power_dependent_alpha(alpha_nl, power, n: int):
    """((1 + alpha P^2)^N - 1) / (N P^2), the end-to-end curve of a
    renormalized per-span model."""
    power = np.asarray(power, dtype=float)
    return np.expm1(n * np.log1p(alpha_nl * power ** 2)) / (n * power ** 2)


def nli_variance(alpha_nl: float, power, n: int):
    power = np.asarray(power, dtype=float)
    return np.expm1(n * np.log1p(alpha_nl * power ** 2))


@dataclass
class AlphaFit:
    alpha_nl: float
    fit_power: float
    powers: np.ndarray
    v_nli: np.ndarray
    alpha_curve: np.ndarray
    spans: int
    low_power_spread_db: float
    step_warning: bool

    def analytic_curve(self, powers=None) -> np.ndarray:
        p = self.powers if powers is None else powers
        return power_dependent_alpha(self.alpha_nl, p, self.spans)


def estimate_alpha_nl(runs: Sequence[tuple[float, SnrEstimate]], n: int,
                      fit_power: Optional[float] = None) -> AlphaFit:
    """Fit the span-averaged NLI coefficient from ASE-free runs.

    ``runs`` pairs a per-tributary launch power (mW) with its estimate. The
    scalar coefficient is inverted at ``fit_power`` (default: the lowest
    power). With two or more runs, the dB spread of the power-dependent
    curve at the two lowest powers is checked against 0.3 dB.
    """
    if not runs:
        raise ValueError("at least one run is required")
    if n < 1:
        raise ValueError("span count must be >= 1")
    ordered = sorted(runs, key=lambda r: r[0])
    powers = np.array([p for p, _ in ordered])
    v = np.array([1.0 / est.snr for _, est in ordered])
    curve = v / (n * powers ** 2)
    if fit_power is None:
        idx = 0
    else:
        idx = int(np.argmin(np.abs(powers - fit_power)))
    alpha = span_averaged_alpha(v[idx], powers[idx], n)
    spread = abs(10 * math.log10(curve[1] / curve[0])) if len(curve) > 1 else 0.0
    warn = spread > FLATNESS_DB
    if warn:
        warnings.warn(
            f"power-dependent NLI coefficient varies by {spread:.2f} dB over the two "
            f"lowest powers; reduce the nonlinear phase per step", StepSizeWarning, stacklevel=2)
    return AlphaFit(alpha, float(powers[idx]), powers, v, curve, n, spread, warn)
