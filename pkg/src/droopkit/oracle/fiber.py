"""Symmetric split-step Fourier propagation of the Manakov equation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.constants as const
import scipy.fft as sfft

from .field import ConfigError, SampledField

MANAKOV_FACTOR = 8.0 / 9.0
DB_PER_NEPER = 10.0 * math.log10(math.e)


@dataclass(frozen=True)
class FiberPhysical:
    """Span fiber. Attenuation in dB/km, dispersion in ps/nm/km, n2 in m^2/W,
    effective area in m^2, length in km."""

    attenuation: float
    dispersion: float
    nonlinear_index: float
    effective_area: float
    length: float
    wavelength: float = const.c / 193.41e12

    def __post_init__(self):
        if self.attenuation < 0:
            raise ConfigError("attenuation must be >= 0")
        if not self.effective_area > 0:
            raise ConfigError("effective area must be positive")
        if not self.length > 0:
            raise ConfigError("span length must be positive")
        if self.nonlinear_index < 0:
            raise ConfigError("nonlinear index must be >= 0")

    @property
    def alpha(self) -> float:
        """Power attenuation, 1/km."""
        return self.attenuation / DB_PER_NEPER

    @property
    def gamma(self) -> float:
        """Nonlinear coefficient 2 pi n2 / (lambda A_eff), 1/(W km)."""
        return 2 * math.pi * self.nonlinear_index / (self.wavelength * self.effective_area) * 1e3

    @property
    def gamma_mw(self) -> float:
        return self.gamma * 1e-3

    @property
    def beta2(self) -> float:
        """Group-velocity dispersion, s^2/km."""
        d = self.dispersion * 1e-6  # s/m^2
        return -d * self.wavelength ** 2 / (2 * math.pi * const.c) * 1e3

    @property
    def span_loss(self) -> float:
        """Linear span transmission."""
        return 10.0 ** (-self.attenuation * self.length / 10.0)


@dataclass(frozen=True)
class StepControl:
    """Constant nonlinear-phase step rule.

    Each step accumulates at most ``max_nl_phase`` rad of gamma * P * L_eff,
    with P the total average power at the step start.
    """

    max_nl_phase: float = 5e-4
    max_steps: int = 200_000

    def __post_init__(self):
        if not self.max_nl_phase > 0:
            raise ConfigError("max_nl_phase must be positive")


def step_lengths(fiber: FiberPhysical, power_mw: float, ctrl: StepControl) -> np.ndarray:
    """Step lengths (km) covering one span for a given input power."""
    gp = fiber.gamma_mw * power_mw
    a = fiber.alpha
    if gp == 0:
        return np.array([fiber.length])
    steps = []
    z = 0.0
    while z < fiber.length:
        local = gp * math.exp(-a * z)
        target = ctrl.max_nl_phase / local
        if a == 0:
            h = target
        elif a * target < 1:
            h = -math.log1p(-a * target) / a
        else:
            h = math.inf
        h = min(h, fiber.length - z)
        steps.append(h)
        z += h
        if len(steps) > ctrl.max_steps:
            raise ConfigError(
                f"step count exceeds max_steps={ctrl.max_steps}; raise max_nl_phase or max_steps")
    return np.asarray(steps)


def dispersion_phase(field: SampledField, beta2: float) -> np.ndarray:
    """beta2/2 * omega^2 per FFT bin (rad per km for beta2 in s^2/km)."""
    omega = 2 * np.pi * field.frequencies()
    return 0.5 * beta2 * omega ** 2


def apply_dispersion(field: SampledField, accumulated_beta2: float) -> SampledField:
    """Lossless linear propagation through beta2 * length = ``accumulated_beta2`` (s^2)."""
    spec = sfft.fft(field.samples, axis=-1)
    spec *= np.exp(1j * dispersion_phase(field, accumulated_beta2))
    return field.with_samples(sfft.ifft(spec, axis=-1))


def propagate_span(field: SampledField, fiber: FiberPhysical,
                   step_ctrl: StepControl = StepControl()) -> SampledField:
    """Propagate one span with distributed loss, dispersion and Manakov Kerr effect."""
    steps = step_lengths(fiber, field.power(), step_ctrl)
    lin_rate = 1j * dispersion_phase(field, fiber.beta2) - 0.5 * fiber.alpha
    gamma = MANAKOV_FACTOR * fiber.gamma_mw

    spec = sfft.fft(field.samples, axis=-1)
    if gamma == 0:
        spec *= np.exp(lin_rate * fiber.length)
        return field.with_samples(sfft.ifft(spec, axis=-1))

    half_prev = 0.0
    for h in steps:
        spec *= np.exp(lin_rate * (half_prev + 0.5 * h))
        a = sfft.ifft(spec, axis=-1)
        p = a.real ** 2 + a.imag ** 2
        a *= np.exp(1j * (gamma * h) * (p[0] + p[1]))
        spec = sfft.fft(a, axis=-1)
        half_prev = 0.5 * h
    spec *= np.exp(lin_rate * half_prev)
    return field.with_samples(sfft.ifft(spec, axis=-1))
