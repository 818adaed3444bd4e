import math
import pickle

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.optimize import minimize_scalar

from droopkit.chain import SpanStage, propagate_ledger
from droopkit.droop import (
    E_DB, UNBOUNDED, DomainError, HomogeneousChain, PhysicalNoiseSpec, RedistributionSpec,
    addition_droop, ase_beta, dbm_to_mw, droop_gap, from_db, gdf_bounds, gdf_osnr,
    gdf_snr_explicit, gn_snr, mw_to_dbm, optimal_powers, power_evolution,
    redistribution_droop, se_gap, se_gap_exact, single_span_snr, snr_report,
    span_loss_from_db, spectral_efficiency, to_db,
)

powers = st.floats(1e-2, 1e2)
betas = st.floats(1e-6, 1e-1)
alphas = st.floats(1e-6, 1e-2)
spans = st.integers(1, 400)


# --- units -------------------------------------------------------------------

@given(st.floats(-60, 60))
def test_db_roundtrip(x):
    assert to_db(from_db(x)) == pytest.approx(x, abs=1e-12)
    assert mw_to_dbm(dbm_to_mw(x)) == pytest.approx(x, abs=1e-12)


def test_unit_anchors():
    assert dbm_to_mw(0.0) == 1.0
    assert dbm_to_mw(10.0) == pytest.approx(10.0)
    assert span_loss_from_db(10.0) == pytest.approx(0.1)
    assert to_db(UNBOUNDED) == math.inf


def test_unbounded_is_singleton_and_picklable():
    assert pickle.loads(pickle.dumps(UNBOUNDED)) is UNBOUNDED
    assert float(UNBOUNDED) == math.inf


# --- noise and droop factors ---------------------------------------------------

def test_ase_beta_hand_value():
    # h*nu*F*B/L with F = 8 dB, B = 34.17 GHz, 78 km at 0.169 dB/km, worked by hand
    noise = PhysicalNoiseSpec(from_db(8.0), 34.17e9)
    beta = ase_beta(noise, span_loss_from_db(0.169 * 78))
    assert beta == pytest.approx(5.7488e-4, rel=1e-3)


def test_ase_beta_scales_with_modes_only_via_injected_power():
    one = PhysicalNoiseSpec(from_db(5.0), 49e9)
    two = PhysicalNoiseSpec(from_db(5.0), 49e9, modes=2)
    assert two.ase_input_power() == pytest.approx(2 * one.ase_input_power())


def test_addition_droop_single_span_snr():
    chi, snr1 = addition_droop(2.0, 1e-3, 0.05)
    assert snr1 == pytest.approx(2.0 * 0.05 / 1e-3)
    assert chi == pytest.approx(1 / (1 + 1 / snr1))


def test_redistribution_droop_zero_is_unbounded():
    chi, snr1 = redistribution_droop(1.0, RedistributionSpec())
    assert chi == 1.0 and snr1 is UNBOUNDED


@pytest.mark.parametrize("bad", [
    dict(noise_figure=0.5, amp_bandwidth=1e9),
    dict(noise_figure=2.0, amp_bandwidth=0.0),
    dict(noise_figure=2.0, amp_bandwidth=1e9, modes=0),
    dict(noise_figure=2.0, amp_bandwidth=1e9, external_crosstalk=-1),
])
def test_noise_spec_rejects(bad):
    with pytest.raises(DomainError):
        PhysicalNoiseSpec(**bad)


# --- droop formula ------------------------------------------------------------

@given(powers, betas, alphas, spans)
def test_gdf_matches_span_by_span_ledger(p, beta, alpha, n):
    loss = 0.05
    stage = SpanStage(loss, p, injected_power=beta * loss,
                      redistribution=RedistributionSpec(alpha_nl=alpha))
    ledger = propagate_ledger([stage] * n, p)
    assert gdf_snr_explicit(p, beta, alpha, n) == pytest.approx(ledger.osnr(), rel=1e-10)


@given(st.floats(1e-3, 1e6), st.floats(1e-3, 1e6), spans)
def test_gdf_osnr_cross_term(a, r, n):
    full = gdf_osnr(a, r, n)
    simple = gdf_osnr(a, r, n, simplified=True)
    # the cross term only adds degradation
    assert full <= simple * (1 + 1e-12)
    mpmath.mp.dps = 40
    a_, r_ = mpmath.mpf(a), mpmath.mpf(r)
    exact = 1 / ((1 + 1 / a_) ** n * (1 + 1 / r_) ** n - 1)
    assert full == pytest.approx(float(exact), rel=1e-9)


def test_gdf_high_precision_against_mpmath():
    mpmath.mp.dps = 50
    for snr1, n in [(1e12, 10_000), (1e3, 1), (0.7, 300), (1e8, 7)]:
        exact = 1 / ((1 + 1 / mpmath.mpf(snr1)) ** n - 1)
        assert gdf_osnr(snr1, None, n) == pytest.approx(float(exact), rel=1e-12)


def test_gdf_single_span():
    # one span: SNR_1 degraded only by the ASE x NLI cross term
    ia, ir = 1e-3, 2e-3
    assert gdf_snr_explicit(1.0, ia, ir, 1) == pytest.approx(1 / (ia + ir + ia * ir), rel=1e-12)
    assert gdf_osnr(1 / ia, 1 / ir, 1, simplified=True) == pytest.approx(
        single_span_snr(1.0, ia, ir), rel=1e-12)


def test_gdf_noiseless_is_unbounded():
    assert gdf_osnr(None, UNBOUNDED, 5) is UNBOUNDED
    assert gdf_snr_explicit(1.0, 0.0, 0.0, 3) is UNBOUNDED
    assert gn_snr(1.0, 0.0, 0.0, 3) is UNBOUNDED


@given(powers, betas, alphas, spans)
def test_gdf_below_gn(p, beta, alpha, n):
    assert gdf_snr_explicit(p, beta, alpha, n) <= gn_snr(p, beta, alpha, n) * (1 + 1e-12)


@pytest.mark.parametrize("args", [(0.0, 1e-3, 1e-3, 1), (1.0, -1.0, 1e-3, 1),
                                  (1.0, 1e-3, 1e-3, 0), (1.0, 1e-3, 1e-3, 2.5)])
def test_gdf_domain(args):
    with pytest.raises(DomainError):
        gdf_snr_explicit(*args)


# --- bounds ---------------------------------------------------------------------

@given(st.floats(1e-3, 1e4), st.integers(1, 5000))
def test_bounds_bracket_gdf(s, n):
    gdf = gdf_osnr(n * s, None, n)
    b = gdf_bounds(s, n)
    assert gdf <= b.upper * (1 + 1e-12)
    if b.lower is not None:
        assert b.lower <= gdf * (1 + 1e-12)


def test_lower_bound_zero_crossing():
    n = 100
    c = droop_gap(n)
    assert c == pytest.approx((n - 1) / (2 * n))
    assert gdf_bounds(c * (1 + 1e-9), n).lower is not None
    assert gdf_bounds(c, n).lower is None


def test_db_approx_is_first_order():
    s, n = 1e3, 50
    b = gdf_bounds(s, n)
    assert b.db_approx == pytest.approx(to_db(s) - E_DB * droop_gap(n) / s, rel=1e-14)
    assert from_db(b.db_approx) == pytest.approx(gdf_osnr(n * s, None, n), rel=1e-6)


def test_snr_report_consistency():
    rep = snr_report(1.0, 5.7e-4, 4.3e-4, 228)
    assert rep.snr_s == rep.snr_gn
    assert rep.snr_lb <= rep.snr_gdf <= rep.snr_ub


# --- power evolution --------------------------------------------------------------

def _chain(p=1.0, n=50):
    noise = PhysicalNoiseSpec(from_db(5.0), 49e9)
    return HomogeneousChain(0.05, n, p, noise)


def test_power_evolution_conserves_total():
    ch = _chain()
    chi = ch.droop_factors().chi
    for k in (0, 1, 10, 50):
        ev = power_evolution(ch, chi, k)
        assert ev.signal + ev.noise == pytest.approx(ch.launch_power, rel=1e-12)


def test_crossover_span_count():
    # signal and ASE meet after ln2 * SNR_a1 spans
    ch = _chain(p=10.0, n=10)
    f = ch.droop_factors()
    ev = power_evolution(ch, f.chi_a, 0)
    k = ev.crossover_spans
    signal = ch.launch_power * f.chi_a ** k
    assert signal == pytest.approx(ch.launch_power / 2, rel=1e-3)


# --- optimum -------------------------------------------------------------------------

@given(betas, alphas, st.integers(1, 300))
def test_optimal_gn_power_maximizes_gn(beta, alpha, n):
    p_gn, p_gdf = optimal_powers(beta, alpha, n)
    res = minimize_scalar(lambda lp: -gn_snr(math.exp(lp), beta, alpha, n),
                          bracket=(math.log(p_gn) - 1, math.log(p_gn) + 1), tol=1e-12)
    assert math.exp(res.x) == pytest.approx(p_gn, rel=1e-4)
    assert p_gdf <= p_gn


@pytest.mark.parametrize("beta,alpha,n", [(5.7488e-4, 4.34e-4, 228), (8.668e-3, 19.01e-4, 40)])
def test_optimal_gdf_power_near_numeric_maximum(beta, alpha, n):
    _, p_gdf = optimal_powers(beta, alpha, n)
    chi = 1 / ((1 + beta / p_gdf) * (1 + alpha * p_gdf ** 2))
    assert beta == pytest.approx(2 / chi * alpha * p_gdf ** 3, rel=1e-9)
    res = minimize_scalar(lambda lp: -to_db(gdf_snr_explicit(math.exp(lp), beta, alpha, n)),
                          bracket=(math.log(p_gdf) - 1, math.log(p_gdf) + 1), tol=1e-12)
    assert to_db(gdf_snr_explicit(p_gdf, beta, alpha, n)) == pytest.approx(-res.fun, abs=1e-3)


def test_optimal_powers_domain():
    with pytest.raises(DomainError):
        optimal_powers(0.0, 1e-3)


# --- spectral efficiency ----------------------------------------------------------------

def test_spectral_efficiency_anchors():
    assert spectral_efficiency(1.0) == pytest.approx(2.0)
    assert spectral_efficiency(3.0) == pytest.approx(4.0)
    assert spectral_efficiency(UNBOUNDED) == math.inf


@given(st.floats(1e-3, 1e6))
def test_se_gap_approx_below_upper_bound(s):
    g = se_gap(s)
    assert 0 < g.approx < g.upper_bound


@pytest.mark.parametrize("s", [20.0, 100.0, 1000.0])
def test_se_gap_approx_tracks_exact_for_long_links(s):
    n = 10_000
    exact = spectral_efficiency(s) - spectral_efficiency(gdf_osnr(n * s, None, n))
    assert se_gap(s).approx == pytest.approx(exact, rel=0.02)


def test_se_gap_exact_positive():
    assert se_gap_exact(1.0, 5.7e-4, 4.3e-4, 228) > 0


@pytest.mark.parametrize("n", [2, 10, 40, 100, 230])
def test_bound_ordering_grid(n):
    for s in np.logspace(-1, 4, 200):
        if s <= droop_gap(n):
            continue
        b = gdf_bounds(s, n)
        gdf = gdf_osnr(n * s, None, n)
        tol = 1 + 1e-12
        assert b.lower <= gdf * tol
        assert gdf <= from_db(b.db_approx) * tol
        assert from_db(b.db_approx) <= b.upper * tol
        assert b.upper <= s * tol


@given(st.floats(1e-2, 1e6), st.floats(1e-2, 1e6), st.integers(1, 500))
def test_gdf_monotone(a, r, n):
    base = gdf_osnr(a, r, n)
    # keep clear of underflow, where neighbouring values all round to 0
    assume(gdf_osnr(a, r, n + 1) > 1e-250)
    assert gdf_osnr(a * 1.01, r, n) > base
    assert gdf_osnr(a, r * 1.01, n) > base
    assert gdf_osnr(a, r, n + 1) < base


def test_two_span_gdf_equals_upper_bound():
    # (1 + 1/(2s))^2 - 1 = (1/s)(1 + c/s) with c = 1/4, so the bound is tight at N = 2
    for s in (0.3, 1.0, 10.0, 1e3):
        b = gdf_bounds(s, 2)
        assert gdf_osnr(2 * s, None, 2) == pytest.approx(b.upper, rel=1e-12)
        assert from_db(b.db_approx) < b.upper
