"""Closed-form droop algebra for a chain of identical amplified spans.

All powers are in mW and the NLI coefficient ``alpha_nl`` is in mW^-2.
Linear SNR values that diverge (noiseless limits) are returned as the
:data:`UNBOUNDED` marker rather than a float.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import scipy.constants as const

#: 10*log10(e), the slope of 10*log10(1 + y) at y = 0.
E_DB = 10.0 * math.log10(math.e)

DEFAULT_CENTER_FREQUENCY = 193.41e12  # Hz, 1550 nm


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a formula."""


class ConvergenceError(ArithmeticError):
    """Raised when an iterative solve fails to converge."""


class Unbounded:
    """Marker for an SNR that is infinite (no noise source active)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "inf"

    def __float__(self):
        return math.inf

    def __reduce__(self):
        return (Unbounded, ())


UNBOUNDED = Unbounded()

Snr = Union[float, Unbounded]


def is_unbounded(value) -> bool:
    return value is UNBOUNDED


_TINY = 1.0 / sys.float_info.max


def inverse(snr: Optional[Snr]) -> float:
    """Return 1/snr, with ``None`` and UNBOUNDED mapping to 0."""
    if snr is None or snr is UNBOUNDED:
        return 0.0
    if snr <= 0:
        raise DomainError(f"SNR must be positive, got {snr!r}")
    return 1.0 / snr


def snr_from_inverse(inv: float) -> Snr:
    if inv < 0:
        raise DomainError(f"inverse SNR must be non-negative, got {inv!r}")
    # below 1/DBL_MAX the reciprocal is not representable
    return UNBOUNDED if inv < _TINY else 1.0 / inv


def to_db(x: Snr) -> float:
    if x is UNBOUNDED:
        return math.inf
    return 10.0 * math.log10(x)


def from_db(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    return 10.0 * math.log10(p_mw)


def span_loss_from_db(loss_db: float) -> float:
    """Linear span transmission (< 1) from a loss in dB."""
    if loss_db <= 0:
        raise DomainError("span loss in dB must be positive")
    return 10.0 ** (-loss_db / 10.0)


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class PhysicalNoiseSpec:
    """Amplifier noise parameters.

    ``noise_figure`` is linear, ``amp_bandwidth`` in Hz, ``modes`` the number
    of amplified modes and ``external_crosstalk`` the lumped crosstalk
    coefficient added on top of ASE.
    """

    noise_figure: float
    amp_bandwidth: float
    modes: int = 1
    external_crosstalk: float = 0.0
    center_frequency: float = DEFAULT_CENTER_FREQUENCY
    planck_constant: float = const.h

    def __post_init__(self):
        if not self.noise_figure >= 1.0:
            raise DomainError(f"noise figure must be >= 1 (linear), got {self.noise_figure}")
        if not self.amp_bandwidth > 0:
            raise DomainError("amplifier bandwidth must be positive")
        if not self.center_frequency > 0:
            raise DomainError("center frequency must be positive")
        if int(self.modes) != self.modes or self.modes < 1:
            raise DomainError("modes must be an integer >= 1")
        if self.external_crosstalk < 0:
            raise DomainError("external crosstalk must be >= 0")
        if not self.planck_constant > 0:
            raise DomainError("Planck constant must be positive")

    def ase_input_power(self) -> float:
        """Equivalent input ASE power M*h*nu*F*B, in mW."""
        watts = (self.modes * self.planck_constant * self.center_frequency
                 * self.noise_figure * self.amp_bandwidth)
        return watts * 1e3

    def injected_power(self, power: float) -> float:
        """Total added power dP_i = M h nu F B + alpha_ex * P, in mW."""
        return self.ase_input_power() + self.external_crosstalk * power


@dataclass(frozen=True)
class RedistributionSpec:
    alpha_nl: float = 0.0
    gawbs_coeff: float = 0.0
    xtalk_coeff: float = 0.0
    span_length: float = 1.0

    def __post_init__(self):
        if min(self.alpha_nl, self.gawbs_coeff, self.xtalk_coeff) < 0:
            raise DomainError("redistribution coefficients must be >= 0")
        if not self.span_length > 0:
            raise DomainError("span length must be positive")

    def redistributed_power(self, power: float) -> float:
        """dP_r = alpha_nl P^3 + (gamma_gawbs + gamma_x) * span_length * P."""
        linear = (self.gawbs_coeff + self.xtalk_coeff) * self.span_length
        return self.alpha_nl * power ** 3 + linear * power


@dataclass(frozen=True)
class HomogeneousChain:
    span_loss: float
    span_count: int
    launch_power: float
    noise: PhysicalNoiseSpec
    redistribution: RedistributionSpec = RedistributionSpec()

    def __post_init__(self):
        if not 0 < self.span_loss < 1:
            raise DomainError(f"span loss must lie in (0, 1), got {self.span_loss}")
        if int(self.span_count) != self.span_count or self.span_count < 1:
            raise DomainError("span count must be an integer >= 1")
        if not self.launch_power > 0:
            raise DomainError("launch power must be positive")

    def droop_factors(self) -> "DroopFactors":
        chi_a, snr_a1 = addition_droop(
            self.launch_power, self.noise.injected_power(self.launch_power), self.span_loss)
        chi_r, snr_r1 = redistribution_droop(self.launch_power, self.redistribution)
        return DroopFactors(chi_a, chi_r, chi_a * chi_r, snr_a1, snr_r1)


@dataclass(frozen=True)
class DroopFactors:
    chi_a: float
    chi_r: float
    chi: float
    snr_a1: Snr
    snr_r1: Snr


class Bounds(NamedTuple):
    upper: float
    lower: Optional[float]
    db_approx: float


@dataclass(frozen=True)
class SnrReport:
    """All homogeneous-chain SNR figures at one operating point."""

    snr_gdf: Snr
    snr_gn: Snr
    snr_1: Snr
    snr_s: Snr
    snr_ub: Optional[float] = None
    snr_lb: Optional[float] = None
    snr_db_approx: Optional[float] = None


# ---------------------------------------------------------------------------
# Operations


def growth_to_snr(log_growth: float) -> Snr:
    """1 / (exp(g) - 1), UNBOUNDED at g = 0 and 0.0 once exp(g) overflows."""
    if log_growth == 0.0:
        return UNBOUNDED
    if log_growth > 700.0:
        return 0.0
    return 1.0 / math.expm1(log_growth)


def _check_power(power: float, name: str = "power") -> None:
    if not power > 0:
        raise DomainError(f"{name} must be positive, got {power!r}")


def _check_spans(n: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"span count must be an integer >= 1, got {n!r}")


def ase_beta(noise: PhysicalNoiseSpec, span_loss: float) -> float:
    """ASE power per mode over ``noise.amp_bandwidth`` at the output of an
    amplifier whose gain equals the span loss inverse, in mW."""
    if not 0 < span_loss < 1:
        raise DomainError(f"span loss must lie in (0, 1), got {span_loss}")
    watts = noise.planck_constant * noise.center_frequency * noise.noise_figure * noise.amp_bandwidth
    return watts * 1e3 / span_loss


def addition_droop(power: float, injected: float, span_loss: float) -> tuple[float, Snr]:
    """Return ``(chi_a, snr_a1)`` for added power ``injected`` at the amplifier input."""
    _check_power(power)
    if injected < 0:
        raise DomainError("injected power must be >= 0")
    if not 0 < span_loss < 1:
        raise DomainError(f"span loss must lie in (0, 1), got {span_loss}")
    inv = injected / span_loss / power
    return 1.0 / (1.0 + inv), snr_from_inverse(inv)


def redistribution_droop(power: float, spec: RedistributionSpec) -> tuple[float, Snr]:
    """Return ``(chi_r, snr_r1)`` for the fiber redistribution mechanisms."""
    _check_power(power)
    inv = spec.redistributed_power(power) / power
    return 1.0 / (1.0 + inv), snr_from_inverse(inv)


class PowerEvolution(NamedTuple):
    signal: float
    noise: float
    crossover_spans: float


def power_evolution(chain: HomogeneousChain, chi: float, spans: Optional[int] = None) -> PowerEvolution:
    """Signal and accumulated noise power after ``spans`` spans of droop ``chi``.

    ``spans`` defaults to ``chain.span_count`` and may be 0. The crossover is
    the span count ln2 * SNR_a1 at which signal and ASE powers meet.
    """
    if not 0 < chi <= 1:
        raise DomainError(f"droop must lie in (0, 1], got {chi}")
    n = chain.span_count if spans is None else spans
    if int(n) != n or n < 0:
        raise DomainError("span count must be a non-negative integer")
    p = chain.launch_power
    log_chi_n = n * math.log(chi)
    signal = p * math.exp(log_chi_n)
    noise = -p * math.expm1(log_chi_n)
    _, snr_a1 = addition_droop(p, chain.noise.injected_power(p), chain.span_loss)
    crossover = math.inf if snr_a1 is UNBOUNDED else math.log(2.0) * snr_a1
    return PowerEvolution(signal, noise, crossover)


def gdf_osnr(snr_a1: Optional[Snr], snr_r1: Optional[Snr], n: int, simplified: bool = False) -> Snr:
    """Generalized droop formula.

    ``None`` or UNBOUNDED single-span SNRs are treated as infinite. With
    ``simplified=True`` the cross term SNR_a1^-1 * SNR_r1^-1 is dropped, i.e.
    the OSNR is evaluated as 1/((1 + 1/SNR_1)^N - 1).
    """
    _check_spans(n)
    ia, ir = inverse(snr_a1), inverse(snr_r1)
    if simplified:
        log_growth = n * math.log1p(ia + ir)
    else:
        log_growth = n * (math.log1p(ia) + math.log1p(ir))
    return growth_to_snr(log_growth)


def gdf_snr_explicit(power: float, beta: float, alpha_nl: float, n: int) -> Snr:
    """GDF with ASE and NLI only: 1/([(1+beta/P)(1+alpha P^2)]^N - 1)."""
    _check_power(power)
    if beta < 0 or alpha_nl < 0:
        raise DomainError("beta and alpha_nl must be >= 0")
    _check_spans(n)
    log_growth = n * (math.log1p(beta / power) + math.log1p(alpha_nl * power ** 2))
    return growth_to_snr(log_growth)


def single_span_snr(power: float, beta: float, alpha_nl: float) -> Snr:
    """SNR_1 = (beta/P + alpha P^2)^-1, the SNR degraded by one span."""
    _check_power(power)
    if beta < 0 or alpha_nl < 0:
        raise DomainError("beta and alpha_nl must be >= 0")
    return snr_from_inverse(beta / power + alpha_nl * power ** 2)


def gn_snr(power: float, beta: float, alpha_nl: float, n: int) -> Snr:
    """Incoherent GN-model SNR, SNR_s = SNR_1 / N."""
    _check_spans(n)
    snr_1 = single_span_snr(power, beta, alpha_nl)
    if snr_1 is UNBOUNDED:
        return UNBOUNDED
    return snr_1 / n


def droop_gap(n: int) -> float:
    """Asymptotic linear gap 1/2 (1 - 1/N) between standard SNR and GDF."""
    return 0.5 * (1.0 - 1.0 / n)


def gdf_bounds(snr_s: float, n: int) -> Bounds:
    """Upper bound, lower bound (None when non-positive) and dB approximation
    of the GDF, from the standard SNR alone."""
    if not snr_s > 0:
        raise DomainError("standard SNR must be positive")
    _check_spans(n)
    c = droop_gap(n)
    upper = snr_s / (1.0 + c / snr_s)
    lower = snr_s - c
    approx_db = to_db(snr_s) - E_DB * c / snr_s
    return Bounds(upper, lower if lower > 0 else None, approx_db)


def snr_report(power: float, beta: float, alpha_nl: float, n: int) -> SnrReport:
    snr_s = gn_snr(power, beta, alpha_nl, n)
    snr_1 = single_span_snr(power, beta, alpha_nl)
    gdf = gdf_snr_explicit(power, beta, alpha_nl, n)
    if snr_s is UNBOUNDED:
        return SnrReport(gdf, snr_s, snr_1, snr_s)
    b = gdf_bounds(snr_s, n)
    return SnrReport(gdf, snr_s, snr_1, snr_s, b.upper, b.lower, from_db(b.db_approx))


def optimal_powers(beta: float, alpha_nl: float, n: int = 1, rtol: float = 1e-10,
                   max_iter: int = 200) -> tuple[float, float]:
    """Return ``(P_oGN, P_oGDF)`` in mW.

    The GDF optimum solves beta = (2/chi(P)) alpha P^3 through the fixed
    point P = P_oGN * chi(P)^(1/3). ``n`` is accepted for signature symmetry;
    the per-span droop does not depend on it.
    """
    if not (beta > 0 and alpha_nl > 0):
        raise DomainError("beta and alpha_nl must be positive")
    _check_spans(n)
    p_gn = (beta / 2.0 / alpha_nl) ** (1.0 / 3.0)
    p = p_gn
    for _ in range(max_iter):
        chi = 1.0 / ((1.0 + beta / p) * (1.0 + alpha_nl * p * p))
        p_next = p_gn * chi ** (1.0 / 3.0)
        if abs(p_next - p) <= rtol * p_next:
            return p_gn, min(p_next, p_gn)
        p = p_next
    raise ConvergenceError(f"optimal GDF power did not converge in {max_iter} iterations")


def spectral_efficiency(snr: Snr) -> float:
    """Dual-polarization AWGN spectral efficiency 2 log2(1 + SNR), b/s/Hz."""
    if snr is UNBOUNDED:
        return math.inf
    if snr < 0:
        raise DomainError("SNR must be >= 0")
    return 2.0 * math.log2(1.0 + snr)


class SeGap(NamedTuple):
    approx: float
    upper_bound: float


def se_gap(snr_gn: float) -> SeGap:
    """Approximation and upper bound of SE_GN - SE_GDF from the GN SNR."""
    if not snr_gn > 0:
        raise DomainError("GN SNR must be positive")
    s = snr_gn
    approx = 2.0 / math.log(2.0) * s / (1.0 + 2.0 * s + 2.0 * s * s)
    upper = 1.0 / (math.log(2.0) * (s + 0.5))
    return SeGap(approx, upper)


def se_gap_exact(power: float, beta: float, alpha_nl: float, n: int) -> float:
    """SE_GN - SE_GDF at one operating point."""
    return (spectral_efficiency(gn_snr(power, beta, alpha_nl, n))
            - spectral_efficiency(gdf_snr_explicit(power, beta, alpha_nl, n)))
