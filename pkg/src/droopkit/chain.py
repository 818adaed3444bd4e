"""Inhomogeneous span-by-span power ledgers and the partially filled / constant-gain
droop variants (COP-GDF, CG-GDF, TU, TL).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .droop import (
    UNBOUNDED,
    DomainError,
    RedistributionSpec,
    Snr,
    growth_to_snr,
    snr_from_inverse,
)


class LedgerConsistencyError(ArithmeticError):
    """The power ledger failed its conservation check."""


LEDGER_RTOL = 1e-12


@dataclass(frozen=True)
class SpanStage:
    """One fiber span followed by a constant-output-power amplifier.

    ``redistribution`` is either a fixed power in mW or a
    :class:`RedistributionSpec` evaluated at the stage input power.
    """

    loss: float
    target_output_power: float
    injected_power: float = 0.0
    redistribution: Union[float, RedistributionSpec] = 0.0

    def __post_init__(self):
        if not 0 < self.loss < 1:
            raise DomainError(f"span loss must lie in (0, 1), got {self.loss}")
        if not self.target_output_power > 0:
            raise DomainError("target output power must be positive")
        if self.injected_power < 0:
            raise DomainError("injected power must be >= 0")
        if not isinstance(self.redistribution, RedistributionSpec) and self.redistribution < 0:
            raise DomainError("redistribution power must be >= 0")

    def redistributed_power(self, input_power: float) -> float:
        if isinstance(self.redistribution, RedistributionSpec):
            return self.redistribution.redistributed_power(input_power)
        return float(self.redistribution)


@dataclass(frozen=True)
class SpanDroops:
    chi_a: float
    chi_r: float
    snr_a1: Snr
    snr_r1: Snr

    @property
    def chi(self) -> float:
        return self.chi_a * self.chi_r


def span_droops(stage: SpanStage, input_power: float) -> SpanDroops:
    if not input_power > 0:
        raise DomainError(f"stage input power must be positive, got {input_power!r}")
    inv_a = stage.injected_power / stage.loss / input_power
    inv_r = stage.redistributed_power(input_power) / input_power
    return SpanDroops(1.0 / (1.0 + inv_a), 1.0 / (1.0 + inv_r),
                      snr_from_inverse(inv_a), snr_from_inverse(inv_r))


@dataclass
class PowerLedger:
    """Signal, additive-noise and redistribution-noise power after each span.

    Index 0 is the launch point; arrays have length N + 1.
    """

    total: np.ndarray
    signal: np.ndarray
    additive: np.ndarray
    redistributed: np.ndarray

    @property
    def span_count(self) -> int:
        return len(self.total) - 1

    def osnr(self, k: Optional[int] = None) -> Snr:
        k = self.span_count if k is None else k
        noise = self.additive[k] + self.redistributed[k]
        return _ratio(self.signal[k], noise)

    def check(self, rtol: float = LEDGER_RTOL) -> None:
        err = np.abs(self.signal + self.additive + self.redistributed - self.total) / self.total
        worst = int(np.argmax(err))
        if err[worst] > rtol:
            raise LedgerConsistencyError(
                f"ledger does not conserve power at span {worst}: relative error {err[worst]:.3e}")


def _stage_terms(stages: Sequence[SpanStage], launch_power: float):
    """Per-stage input power, injected power at the fiber input and
    redistributed power, as plain float lists."""
    inputs = [launch_power] + [st.target_output_power for st in stages[:-1]]
    injected = [st.injected_power / st.loss for st in stages]
    redistributed = [st.redistributed_power(p) for st, p in zip(stages, inputs)]
    return inputs, injected, redistributed


def propagate_ledger(stages: Sequence[SpanStage], launch_power: float) -> PowerLedger:
    """Run the span-by-span signal/ASE/redistribution recursion."""
    if not stages:
        raise DomainError("at least one stage is required")
    if not launch_power > 0:
        raise DomainError("launch power must be positive")
    inputs, injected, redistributed = _stage_terms(stages, launch_power)
    total, ps, pa, pr = [launch_power], [launch_power], [0.0], [0.0]
    for stage, p_in, inj, red in zip(stages, inputs, injected, redistributed):
        chi_r = 1.0 / (1.0 + red / p_in)
        chi = chi_r / (1.0 + inj / p_in)
        p_out = stage.target_output_power
        gain = chi * (p_out / p_in)
        ps.append(ps[-1] * gain)
        pa.append((pa[-1] + inj / chi_r) * gain)
        pr.append((pr[-1] + red) * gain)
        total.append(p_out)
    ledger = PowerLedger(*(np.array(x) for x in (total, ps, pa, pr)))
    ledger.check()
    return ledger


@dataclass(frozen=True)
class LedgerEndpoint:
    total: float
    signal: float
    additive: float
    redistributed: float

    def osnr(self) -> Snr:
        return _ratio(self.signal, self.additive + self.redistributed)


def _tail_products(chi: np.ndarray) -> np.ndarray:
    """out[k] = prod(chi[k:]) for every k."""
    return np.cumprod(chi[::-1])[::-1]


def closed_form_ledger(stages: Sequence[SpanStage], launch_power: float) -> LedgerEndpoint:
    """Closed-form signal/noise split after the last span.

    Needs the stage input powers, which are the previous stage targets.
    """
    if not stages:
        raise DomainError("at least one stage is required")
    inputs, injected, red = (np.array(x) for x in _stage_terms(stages, launch_power))
    inv_a_m1 = injected / inputs
    inv_r_m1 = red / inputs
    chi_a = 1.0 / (1.0 + inv_a_m1)
    chi_r = 1.0 / (1.0 + inv_r_m1)
    tail = _tail_products(chi_a * chi_r)
    p_n = stages[-1].target_output_power
    signal = p_n * tail[0]
    additive = p_n * float(np.sum(inv_a_m1 / chi_r * tail))
    redistributed = p_n * float(np.sum(inv_r_m1 * tail))
    return LedgerEndpoint(p_n, signal, additive, redistributed)


def product_rule_osnr(stages: Sequence[SpanStage], launch_power: float) -> Snr:
    """OSNR from the product of per-span inverse droops."""
    inputs, injected, redistributed = _stage_terms(stages, launch_power)
    log_growth = math.fsum(math.log1p(a / p) + math.log1p(r / p)
                           for p, a, r in zip(inputs, injected, redistributed))
    return growth_to_snr(log_growth)


# ---------------------------------------------------------------------------
# Partially filled amplifiers


@dataclass(frozen=True)
class MultiplexSpec:
    """Signal occupancy of the amplified mode/bandwidth space.

    Bandwidths are in Hz and the per-tributary power in mW.
    """

    signal_modes: int
    channel_count: int
    tributary_bandwidth: float
    amp_bandwidth: float
    amplified_modes: Optional[int] = None
    per_tributary_power: float = 1.0

    def __post_init__(self):
        if self.signal_modes < 1 or self.channel_count < 1:
            raise DomainError("mode and channel counts must be >= 1")
        if self.amplified_modes is not None and self.amplified_modes < self.signal_modes:
            raise DomainError("amplified_modes must be >= signal_modes")
        if not (self.tributary_bandwidth > 0 and self.amp_bandwidth > 0):
            raise DomainError("bandwidths must be positive")
        if not self.per_tributary_power > 0:
            raise DomainError("per-tributary power must be positive")

    @property
    def amplified_mode_count(self) -> int:
        return self.signal_modes if self.amplified_modes is None else self.amplified_modes

    @property
    def amplified_slots(self) -> float:
        """N_a = B_a / B_rx."""
        return self.amp_bandwidth / self.tributary_bandwidth

    @property
    def total_power(self) -> float:
        return self.signal_modes * self.channel_count * self.per_tributary_power


def fill_in_efficiency(mux: MultiplexSpec) -> float:
    """eta_A = M N_c / (M_a N_a)."""
    eta = (mux.signal_modes * mux.channel_count
           / (mux.amplified_mode_count * mux.amplified_slots))
    if eta > 1.0 + 1e-12:
        raise DomainError(
            f"fill-in efficiency {eta:.4g} exceeds 1: the signal multiplex "
            f"(M*N_c*B_rx) is wider than the amplified space (M_a*B_a)")
    return min(eta, 1.0)


def _ratio(signal: float, noise: float) -> Snr:
    """signal / noise without overflow: tiny noise is unbounded, lost signal is 0."""
    if signal == 0:
        return 0.0
    return snr_from_inverse(float(noise) / float(signal))


def tributary_snr(ledger: Union[PowerLedger, LedgerEndpoint], eta_a: float) -> Snr:
    """Per-tributary SNR when ASE fills 1/eta_A times the signal occupancy."""
    if not 0 < eta_a <= 1:
        raise DomainError("fill-in efficiency must lie in (0, 1]")
    if isinstance(ledger, PowerLedger):
        ps, pa, pr = ledger.signal[-1], ledger.additive[-1], ledger.redistributed[-1]
    else:
        ps, pa, pr = ledger.signal, ledger.additive, ledger.redistributed
    return _ratio(ps, pa * eta_a + pr)


def _droop_ratio(add_terms: np.ndarray, inv_chi_r: np.ndarray, chi: np.ndarray) -> Snr:
    """prod(chi) / sum_k [add_k + (1/chi_rk - 1)] prod_{m>=k} chi_m.

    ``add_terms`` holds the additive contribution of each span; ``inv_chi_r``
    is passed as 1/chi_r - 1 to keep small values exact.
    """
    tail = _tail_products(chi)
    return _ratio(tail[0], float(np.sum((add_terms + inv_chi_r) * tail)))


def _geometric_count(u: float, k: np.ndarray) -> np.ndarray:
    """(1 - chi_a^(k-1)) / (1 - chi_a) with chi_a = 1/(1+u)."""
    if u == 0.0:
        return (k - 1).astype(float)
    # 1 - chi_a^(k-1) = -expm1(-(k-1) log1p(u)); 1 - chi_a = u / (1 + u)
    return -np.expm1(-(k - 1) * math.log1p(u)) * (1.0 + u) / u


@dataclass(frozen=True)
class CopGdfResult:
    snr: Snr
    valid: bool
    effective_power: np.ndarray
    chi_a: float
    eta_a: float


def cop_gdf_snr(mux: MultiplexSpec, beta: float, alpha_nl: float, n: int,
                exact_ledger: bool = False) -> CopGdfResult:
    """Per-tributary SNR of a COP chain whose amplifiers are partially filled.

    Out-of-band ASE steals power from the NLI-generating signal; the
    effective per-tributary power at span k is returned alongside the SNR.
    ``exact_ledger`` propagates the out-of-band ASE with the full per-span
    droop instead of the ASE droop alone.
    """
    if beta < 0 or alpha_nl < 0:
        raise DomainError("beta and alpha_nl must be >= 0")
    if int(n) != n or n < 1:
        raise DomainError("span count must be an integer >= 1")
    eta = fill_in_efficiency(mux)
    pt = mux.per_tributary_power
    u = beta / (eta * pt)                    # 1/chi_a - 1
    chi_a = 1.0 / (1.0 + u)
    o_ase = beta * (1.0 / eta - 1.0)         # out-of-band ASE per amp, per tributary
    k = np.arange(1, n + 1)

    if not exact_ledger:
        pe = pt - o_ase * _geometric_count(u, k)
        pe_clamped = np.maximum(pe, 0.0)
        inv_r_m1 = alpha_nl * pt ** 2 * (pe_clamped / pt) ** 3
    else:
        pe = np.empty(n)
        inv_r_m1 = np.empty(n)
        carried = 0.0
        for j in range(n):
            pe[j] = pt - carried
            inv_r_m1[j] = alpha_nl * pt ** 2 * (max(pe[j], 0.0) / pt) ** 3
            carried = carried * chi_a / (1.0 + inv_r_m1[j]) + o_ase
        pe_clamped = np.maximum(pe, 0.0)

    inv_chi_r = 1.0 + inv_r_m1
    chi = chi_a / inv_chi_r
    snr = _droop_ratio(u * inv_chi_r * eta, inv_r_m1, chi)
    return CopGdfResult(snr, bool(np.all(pe > 0)), pe_clamped, chi_a, eta)


class TuTl(NamedTuple):
    tu: Snr
    tl: Optional[float]


def nli_power_cg(pt: float, beta: float, alpha_nl: float, n: int) -> float:
    """NLI power with ASE-enhanced span powers, summed over spans 0..N-1."""
    spans = np.arange(n)
    return alpha_nl * float(np.sum((pt + spans * beta) ** 3))


def tu_tl_snr(pt: float, beta: float, alpha_nl: float, n: int) -> TuTl:
    """Constant-gain TU and TL SNRs; TL is None where the NLI exceeds the signal."""
    if not pt > 0:
        raise DomainError("per-tributary power must be positive")
    if beta < 0 or alpha_nl < 0:
        raise DomainError("beta and alpha_nl must be >= 0")
    if int(n) != n or n < 1:
        raise DomainError("span count must be an integer >= 1")
    p_nli = nli_power_cg(pt, beta, alpha_nl, n)
    denom = n * beta + p_nli
    if denom == 0:
        return TuTl(UNBOUNDED, UNBOUNDED)
    tl = (pt - p_nli) / denom if p_nli < pt else None
    return TuTl(pt / denom, tl)


def cg_gdf_snr(pt: float, beta: float, alpha_nl: float, n: int) -> Snr:
    """Constant-gain droop formula: no ASE droop, NLI grown by accumulated ASE."""
    if not pt > 0:
        raise DomainError("per-tributary power must be positive")
    if beta < 0 or alpha_nl < 0:
        raise DomainError("beta and alpha_nl must be >= 0")
    if int(n) != n or n < 1:
        raise DomainError("span count must be an integer >= 1")
    k = np.arange(1, n + 1)
    inv_r_m1 = alpha_nl * pt ** 2 * (1.0 + (k - 1) * beta / pt) ** 3
    inv_chi_r = 1.0 + inv_r_m1
    return _droop_ratio(beta / pt * inv_chi_r, inv_r_m1, 1.0 / inv_chi_r)


__all__ = [
    "CopGdfResult", "LedgerConsistencyError", "LedgerEndpoint", "MultiplexSpec",
    "PowerLedger", "SpanDroops", "SpanStage", "TuTl", "closed_form_ledger",
    "cg_gdf_snr", "cop_gdf_snr", "fill_in_efficiency", "nli_power_cg",
    "product_rule_osnr", "propagate_ledger", "span_droops", "tributary_snr",
]
