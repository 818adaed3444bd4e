import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from droopkit.chain import MultiplexSpec, cop_gdf_snr
from droopkit.droop import PhysicalNoiseSpec, ase_beta, from_db, to_db
from droopkit.oracle import (
    CG, COP, AmplifierModel, ConfigError, FiberPhysical, LinkScenario, SampledField,
    StepControl, StepSizeWarning, TransmitterConfig, amplify, apply_dispersion,
    estimate_alpha_nl, generate_multiplex, power_dependent_alpha, propagate_span,
    read_field, receive_tributary, simulate_link, simulate_point, span_averaged_alpha,
    step_lengths, write_field,
)
from droopkit.oracle.alpha import nli_variance
from droopkit.oracle.receiver import SnrEstimate

NZDSF = FiberPhysical(0.22, 3.8, 2.6e-20, 70.26e-12, 120.0)
LINEAR = replace(NZDSF, nonlinear_index=0.0)
SMALL_TX = TransmitterConfig(channel_count=3, symbols_per_run=2048, samples_per_symbol=8)


def _beta(fiber=NZDSF, nf_db=5.0, rs=49e9):
    return ase_beta(PhysicalNoiseSpec(from_db(nf_db), rs), fiber.span_loss)


# --- transmitter ---------------------------------------------------------------------

def test_single_channel_power():
    cfg = TransmitterConfig(channel_count=1, per_tributary_power=2.5, symbols_per_run=1024)
    field, _ = generate_multiplex(cfg)
    assert abs(to_db(field.power() / 2.5)) < 0.01


def test_multiplex_power_and_out_of_band_floor():
    field, _ = generate_multiplex(SMALL_TX)
    assert field.power() == pytest.approx(3.0, rel=0.02)
    psd = np.sum(np.abs(np.fft.fft(field.samples, axis=-1)) ** 2, axis=0)
    f = field.frequencies()
    inside = np.abs(f) <= SMALL_TX.wdm_bandwidth / 2
    band_edge = (SMALL_TX.wdm_bandwidth / 2 - SMALL_TX.channel_spacing / 2
                 + SMALL_TX.symbol_rate * (1 - SMALL_TX.rolloff) / 2)
    passband = np.abs(f) <= band_edge
    floor_db = 10 * np.log10(psd[~inside].max() / psd[passband].mean())
    assert floor_db <= -40


def test_generation_is_deterministic():
    a, sa = generate_multiplex(SMALL_TX)
    b, sb = generate_multiplex(SMALL_TX)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(sa, sb)
    c, _ = generate_multiplex(replace(SMALL_TX, rng_seed=2))
    assert not np.array_equal(a.samples, c.samples)


@pytest.mark.parametrize("fmt", ["PDM-QPSK", "PDM-16QAM", "PDM-Gaussian"])
def test_symbol_energy_normalized(fmt):
    _, sym = generate_multiplex(replace(SMALL_TX, format=fmt))
    assert np.mean(np.abs(sym) ** 2) == pytest.approx(1.0, rel=1e-12)


def test_transmitter_rejects_bad_configs():
    with pytest.raises(ConfigError, match="spacing"):
        TransmitterConfig(channel_spacing=40e9)
    with pytest.raises(ConfigError, match="sample rate"):
        TransmitterConfig(channel_count=9, samples_per_symbol=8)
    with pytest.raises(ConfigError):
        TransmitterConfig(format="OOK")


# --- propagation ------------------------------------------------------------------------

def test_lossless_linear_span_conserves_power():
    field, _ = generate_multiplex(SMALL_TX)
    fiber = FiberPhysical(0.0, 17.0, 0.0, 80e-12, 80.0)
    out = propagate_span(field, fiber)
    assert out.power() == pytest.approx(field.power(), rel=1e-12)


def test_lossless_nonlinear_span_conserves_power():
    field, _ = generate_multiplex(replace(SMALL_TX, per_tributary_power=5.0))
    fiber = replace(NZDSF, attenuation=0.0, length=5.0)
    out = propagate_span(field, fiber, StepControl(1e-2))
    assert out.power() == pytest.approx(field.power(), rel=1e-12)


def test_dispersion_is_invertible():
    field, _ = generate_multiplex(SMALL_TX)
    b2l = NZDSF.beta2 * 2000.0
    back = apply_dispersion(apply_dispersion(field, b2l), -b2l)
    err = np.linalg.norm(back.samples - field.samples) / np.linalg.norm(field.samples)
    assert err < 1e-10


def test_span_loss_applied():
    field, _ = generate_multiplex(SMALL_TX)
    out = propagate_span(field, LINEAR)
    assert out.power() == pytest.approx(field.power() * LINEAR.span_loss, rel=1e-12)


def test_step_lengths_respect_phase_ceiling():
    ctrl = StepControl(5e-4)
    p = 7.0
    h = step_lengths(NZDSF, p, ctrl)
    assert h.sum() == pytest.approx(NZDSF.length, rel=1e-12)
    z = np.concatenate([[0.0], np.cumsum(h)[:-1]])
    a = NZDSF.alpha
    phase = NZDSF.gamma_mw * p * np.exp(-a * z) * (-np.expm1(-a * h)) / a
    assert np.all(phase <= 5e-4 * (1 + 1e-9))


def test_step_overflow_guard():
    with pytest.raises(ConfigError, match="max_steps"):
        step_lengths(NZDSF, 100.0, StepControl(1e-6, max_steps=1000))


def test_fiber_validation():
    with pytest.raises(ConfigError):
        FiberPhysical(-0.1, 17, 2.6e-20, 80e-12, 80)
    with pytest.raises(ConfigError):
        FiberPhysical(0.2, 17, 2.6e-20, 0.0, 80)
    # gamma for n2 = 2.6e-20, A_eff = 70.26 um^2 at 1550 nm, worked by hand
    assert NZDSF.gamma == pytest.approx(1.50, rel=2e-3)


# --- amplifier --------------------------------------------------------------------------

def test_cop_without_ase_sets_output_power():
    field, _ = generate_multiplex(SMALL_TX)
    amp = AmplifierModel(COP, from_db(5.0), output_power=4.2, ase=False)
    out = amplify(propagate_span(field, LINEAR), amp, np.random.default_rng(0))
    assert out.power() == pytest.approx(4.2, rel=1e-12)


def test_cg_without_ase_restores_launch_power():
    field, _ = generate_multiplex(SMALL_TX)
    amp = AmplifierModel(CG, 1.0, gain=1 / LINEAR.span_loss, ase=False)
    out = amplify(propagate_span(field, LINEAR), amp, np.random.default_rng(0))
    assert out.power() == pytest.approx(field.power(), rel=1e-12)


def test_ase_power_matches_beta():
    # Monte-Carlo power of one CG amplifier's ASE over B = 49 GHz
    n, rate = 2 ** 20, 12 * 49e9
    zero = SampledField(np.zeros((2, n), complex), rate)
    nf = from_db(5.0)
    amp = AmplifierModel(CG, nf, gain=1 / NZDSF.span_loss)
    out = amplify(zero, amp, np.random.default_rng(11))
    spec = np.fft.fft(out.samples, axis=-1)
    band = np.abs(out.frequencies()) <= 49e9 / 2
    measured = np.sum(np.abs(spec[:, band]) ** 2) / n ** 2
    assert measured == pytest.approx(_beta(), rel=0.01)


def test_amplifier_validation():
    with pytest.raises(ConfigError):
        AmplifierModel(COP, 2.0)
    with pytest.raises(ConfigError):
        AmplifierModel(CG, 2.0, gain=0.5)
    with pytest.raises(ConfigError):
        AmplifierModel("xyz", 2.0, gain=2.0)


# --- receiver ------------------------------------------------------------------------------

def test_back_to_back_snr_floor():
    field, sym = generate_multiplex(SMALL_TX)
    est = receive_tributary(field, SMALL_TX, sym, channels=range(3))
    assert est.snr_db > 50
    np.testing.assert_allclose(est.scale, np.sqrt(0.5), rtol=1e-9)


def test_receiver_undoes_dispersion():
    field, sym = generate_multiplex(SMALL_TX)
    b2l = NZDSF.beta2 * 1200.0
    est = receive_tributary(apply_dispersion(field, b2l), SMALL_TX, sym, accumulated_beta2=b2l)
    assert est.snr_db > 50


def _noisy_estimate(cfg, seed, snr_db=10.0):
    field, sym = generate_multiplex(cfg)
    noise_rng = np.random.default_rng(seed)
    # white noise scaled so that the in-band SNR over the symbol rate is snr_db
    var = cfg.per_tributary_power / from_db(snr_db) * cfg.samples_per_symbol / 2
    w = (noise_rng.standard_normal((2, cfg.n_samples))
         + 1j * noise_rng.standard_normal((2, cfg.n_samples))) * np.sqrt(var / 2)
    return receive_tributary(field.with_samples(field.samples + w), cfg, sym)


def test_estimate_matches_injected_snr():
    cfg = TransmitterConfig(channel_count=1, symbols_per_run=2 ** 14, samples_per_symbol=4)
    est = _noisy_estimate(cfg, 3)
    assert est.snr_db == pytest.approx(10.0, abs=est.ci95_db)


def test_estimate_variance_scales_inversely_with_symbols():
    sizes = [2 ** 12, 2 ** 14, 2 ** 16]
    variances = []
    for m in sizes:
        cfg = TransmitterConfig(channel_count=1, symbols_per_run=m, samples_per_symbol=4)
        vals = [_noisy_estimate(cfg, seed).snr for seed in range(30)]
        variances.append(np.var(vals, ddof=1))
    slope = np.polyfit(np.log(sizes), np.log(variances), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.3)


def test_low_snr_flagged():
    cfg = TransmitterConfig(channel_count=1, symbols_per_run=1024, samples_per_symbol=4)
    assert _noisy_estimate(cfg, 0, snr_db=-3.0).low_confidence


# --- NLI coefficient ------------------------------------------------------------------------

def _est(snr):
    return SnrEstimate(snr=snr, symbol_count=8192)


def test_alpha_single_span_inversion():
    fit = estimate_alpha_nl([(0.5, _est(1 / 2e-4))], 1)
    assert fit.alpha_nl == pytest.approx(2e-4 / 0.25, rel=1e-14)


def test_alpha_roundtrip_and_flat_curve():
    alpha, n = 3e-4, 50
    powers = [0.05, 0.1, 1.0, 3.0]
    runs = [(p, _est(1 / float(nli_variance(alpha, p, n)))) for p in powers]
    with warnings.catch_warnings():
        warnings.simplefilter("error", StepSizeWarning)
        fit = estimate_alpha_nl(runs, n)
    assert fit.alpha_nl == pytest.approx(alpha, rel=1e-10)
    np.testing.assert_allclose(fit.alpha_curve, power_dependent_alpha(alpha, powers, n), rtol=1e-10)
    assert span_averaged_alpha(float(nli_variance(alpha, 2.0, n)), 2.0, n) == pytest.approx(alpha)


def test_alpha_warns_on_steep_low_power_curve():
    n = 10
    runs = [(0.1, _est(1 / (n * 1e-3 * 0.01))), (0.2, _est(1 / (n * 2e-3 * 0.04)))]
    with pytest.warns(StepSizeWarning):
        fit = estimate_alpha_nl(runs, n)
    assert fit.step_warning and fit.low_power_spread_db == pytest.approx(3.0103, abs=1e-3)


# --- raw dump ----------------------------------------------------------------------------------

def test_field_dump_roundtrip(tmp_path):
    field, _ = generate_multiplex(SMALL_TX)
    path = tmp_path / "f.bin"
    write_field(path, field)
    back = read_field(path)
    assert back.sample_rate == field.sample_rate
    np.testing.assert_allclose(back.samples, field.samples, atol=1e-6)
    raw = path.read_bytes()
    assert raw[:4] == b"DRPF" and len(raw) == 22 + 16 * field.n


def test_field_dump_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(ConfigError, match="magic"):
        read_field(path)


# --- link runs -------------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 5, 10])
def test_linear_cg_link_matches_budget(n):
    tx = replace(SMALL_TX, symbols_per_run=4096)
    sc = LinkScenario(LINEAR, n, tx, from_db(5.0), amplifier_mode=CG)
    est = simulate_point(sc, 0.5)[0].estimate
    assert est.snr_db == pytest.approx(to_db(0.5 / (n * _beta(LINEAR))), abs=0.2)


def test_linear_cop_link_matches_droop_formula():
    tx = replace(SMALL_TX, symbols_per_run=4096)
    sc = LinkScenario(LINEAR, 10, tx, from_db(5.0))
    est = simulate_point(sc, 0.5)[0].estimate
    # the filtered band is 3 x 50 GHz around three 49 GHz tributaries
    mux = MultiplexSpec(1, 3, 49e9, 3 * 50e9, per_tributary_power=0.5)
    want = cop_gdf_snr(mux, _beta(LINEAR), 0.0, 10).snr
    assert est.snr_db == pytest.approx(to_db(want), abs=0.2)


def test_unfiltered_ase_lowers_cop_snr():
    tx = replace(SMALL_TX, symbols_per_run=1024)
    filt = LinkScenario(LINEAR, 5, tx, from_db(5.0))
    open_ = replace(filt, inband_filter=False)
    a = simulate_point(filt, 0.1)[0].estimate
    b = simulate_point(open_, 0.1)[0].estimate
    assert b.snr_db < a.snr_db - a.ci95_db


def test_doubling_symbols_within_confidence():
    sc = LinkScenario(LINEAR, 3, replace(SMALL_TX, symbols_per_run=2048), from_db(5.0))
    a = simulate_point(sc, 0.3)[0].estimate
    b = simulate_point(replace(sc, transmitter=replace(sc.transmitter, symbols_per_run=4096)), 0.3)[0].estimate
    assert abs(a.snr_db - b.snr_db) < math.hypot(a.ci95_db, b.ci95_db)


def test_link_is_deterministic_with_provenance():
    sc = LinkScenario(replace(NZDSF, length=40.0), 2, replace(SMALL_TX, symbols_per_run=512),
                      from_db(5.0), step=StepControl(2e-3), seed=7)
    a = simulate_link(sc, [0.5, 2.0], record_spans=[1, 2])
    b = simulate_link(sc, [0.5, 2.0], record_spans=[1, 2])
    assert [p.estimate.snr for p in a] == [p.estimate.snr for p in b]
    assert [(p.index, p.spans) for p in a] == [(0, 1), (0, 2), (1, 1), (1, 2)]
    prov = a[-1].provenance
    assert prov["spans"] == 2 and prov["amplifier_mode"] == COP and prov["inband_filter"] is True


def test_parallel_matches_serial():
    sc = LinkScenario(LINEAR, 2, replace(SMALL_TX, symbols_per_run=512), from_db(5.0), seed=3)
    serial = simulate_link(sc, [0.2, 1.0])
    parallel = simulate_link(sc, [0.2, 1.0], workers=2)
    assert [p.estimate.snr for p in serial] == [p.estimate.snr for p in parallel]


def test_scenario_validation():
    with pytest.raises(ConfigError):
        LinkScenario(NZDSF, 0, SMALL_TX, 2.0)
    with pytest.raises(ConfigError):
        LinkScenario(NZDSF, 2, SMALL_TX, 2.0, amplifier_mode="auto")
    sc = LinkScenario(LINEAR, 2, SMALL_TX, 2.0)
    with pytest.raises(ConfigError):
        simulate_point(sc, 1.0, record_spans=[3])


@pytest.mark.slow
def test_step_halving_converged_at_optimum():
    # 5 x 120 km NZDSF at its optimum launch power (about 1.5 mW per tributary)
    tx = TransmitterConfig(symbols_per_run=4096, samples_per_symbol=12)
    base = LinkScenario(NZDSF, 5, tx, from_db(5.0))
    coarse = simulate_point(base, 1.5)[0].estimate
    fine = simulate_point(replace(base, step=StepControl(2.5e-4)), 1.5)[0].estimate
    assert abs(coarse.snr_db - fine.snr_db) < 0.05
