"""Sweep orchestration across the analytic models and the split-step oracle,
with CSV/JSON report emission and pairwise model comparison."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from scipy.optimize import minimize_scalar

from .chain import cg_gdf_snr, cop_gdf_snr, tu_tl_snr
from .config import ScenarioConfig
from .droop import (E_DB, DomainError, dbm_to_mw, droop_gap, gdf_bounds, gdf_snr_explicit, gn_snr,
                    is_unbounded, mw_to_dbm, optimal_powers, spectral_efficiency, to_db)
from .oracle.alpha import estimate_alpha_nl
from .oracle.link import simulate_link

log = logging.getLogger(__name__)

CSV_COLUMNS = ("sweep_var", "sweep_value", "model", "snr_db", "snr_linear", "se_bshz", "valid", "note")
GAP_COLUMNS = ("sweep_var", "sweep_value", "model_a", "model_b", "snr_a_db", "snr_b_db",
               "gap_db", "predicted_gap_db")


class CompareError(ValueError):
    """Result sets that cannot be compared point by point."""


@dataclass(frozen=True)
class ModelResult:
    sweep_var: str
    sweep_value: float
    model: str
    snr_linear: float
    valid: bool = True
    note: str = ""
    runtime_s: float = 0.0

    @property
    def snr_db(self) -> float:
        s = self.snr_linear
        if math.isnan(s) or s <= 0:
            return math.nan
        return math.inf if math.isinf(s) else 10.0 * math.log10(s)

    @property
    def se_bshz(self) -> float:
        if math.isnan(self.snr_linear):
            return math.nan
        return spectral_efficiency(self.snr_linear)

    def row(self) -> dict:
        return {
            "sweep_var": self.sweep_var,
            "sweep_value": _fmt(self.sweep_value),
            "model": self.model,
            "snr_db": _fmt(self.snr_db),
            "snr_linear": _fmt(self.snr_linear),
            "se_bshz": _fmt(self.se_bshz),
            "valid": "true" if self.valid else "false",
            "note": self.note,
        }


def _fmt(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _snr_value(snr) -> float:
    return math.inf if is_unbounded(snr) else float(snr)


# --- analytic models ---------------------------------------------------------

def _analytic(model: str, cfg: ScenarioConfig, power: float, spans: int, alpha: float):
    """Return (snr_linear, valid, note) for one analytic model at one point."""
    beta = cfg.beta
    if model == "gdf":
        return _snr_value(gdf_snr_explicit(power, beta, alpha, spans)), True, ""
    if model == "gn":
        return _snr_value(gn_snr(power, beta, alpha, spans)), True, ""
    if model in ("gdf-ub", "gdf-lb", "gdf-dbapprox"):
        s = gn_snr(power, beta, alpha, spans)
        if is_unbounded(s):
            return math.inf, True, ""
        b = gdf_bounds(s, spans)
        if model == "gdf-ub":
            return b.upper, True, ""
        if model == "gdf-lb":
            if b.lower is None:
                return math.nan, False, "lower bound non-positive"
            return b.lower, True, ""
        return 10 ** (b.db_approx / 10), True, ""
    if model == "cop-gdf":
        mux = cfg.mux(power)
        res = cop_gdf_snr(mux, beta, alpha, spans)
        exact = cop_gdf_snr(mux, beta, alpha, spans, exact_ledger=True)
        delta = to_db(exact.snr) - to_db(res.snr)
        note = f"eta_a={res.eta_a:.6g}; exact-ledger delta_db={delta:.3g}"
        if not res.valid:
            note += "; effective power clamped at zero"
        return _snr_value(res.snr), res.valid, note
    if model == "cg-gdf":
        return _snr_value(cg_gdf_snr(power, beta, alpha, spans)), True, ""
    if model in ("tu", "tl"):
        tt = tu_tl_snr(power, beta, alpha, spans)
        if model == "tu":
            return _snr_value(tt.tu), True, ""
        if tt.tl is None:
            return math.nan, False, "noise exceeds signal; lower bound undefined"
        return _snr_value(tt.tl), True, ""
    raise ValueError(f"not an analytic model: {model}")


def _optimum_power(model: str, cfg: ScenarioConfig, spans: int, alpha: float) -> float:
    """Launch power (mW) maximizing the model's SNR, searched in dBm."""
    if model == "gn":
        return optimal_powers(cfg.beta, alpha, spans)[0]
    p_gn = optimal_powers(cfg.beta, alpha, spans)[0]
    center = mw_to_dbm(p_gn)

    def cost(p_dbm):
        snr, valid, _ = _analytic(model, cfg, dbm_to_mw(p_dbm), spans, alpha)
        return -snr if valid and snr > 0 else 0.0

    res = minimize_scalar(cost, bounds=(center - 10, center + 5), method="bounded",
                          options={"xatol": 1e-6})
    return dbm_to_mw(res.x)


# --- sweep -------------------------------------------------------------------

def _points(cfg: ScenarioConfig):
    """(sweep_value, power_mw, spans) triples in sweep order."""
    sw = cfg.sweep
    if sw.variable == "power":
        return [(float(v), dbm_to_mw(float(v)), cfg.link.spans) for v in sw.values()]
    return [(int(v), sw.fixed_power, int(v)) for v in sw.values()]


def fit_alpha_from_ssfm(cfg: ScenarioConfig, spans: Sequence[int], seed: Optional[int] = None,
                        threads: int = 1) -> dict:
    """Single low-power ASE-free run recorded at every span count in ``spans``."""
    spans = sorted(set(int(n) for n in spans))
    scenario = cfg.link_scenario(spans=max(spans), seed=seed, ase=False)
    pts = simulate_link(scenario, [cfg.alpha_nl.fit_power], workers=threads, record_spans=spans)
    return {pt.spans: estimate_alpha_nl([(pt.power, pt.estimate)], pt.spans).alpha_nl for pt in pts}


def _ssfm_rows(cfg: ScenarioConfig, points, seed, threads) -> list:
    sw = cfg.sweep
    t0 = time.perf_counter()
    try:
        if sw.variable == "power":
            scenario = cfg.link_scenario(seed=seed)
            sims = simulate_link(scenario, [p for _, p, _ in points], workers=threads)
            by_value = {v: pt for (v, _, _), pt in zip(points, sims)}
        else:
            spans = [n for _, _, n in points]
            scenario = cfg.link_scenario(spans=max(spans), seed=seed)
            sims = simulate_link(scenario, [sw.fixed_power], workers=threads, record_spans=spans)
            by_value = {pt.spans: pt for pt in sims}
    except (ValueError, ArithmeticError, MemoryError) as exc:
        log.error("ssfm failed: %s", exc)
        return [ModelResult(sw.variable, v, "ssfm", math.nan, False, f"simulation failed: {exc}")
                for v, _, _ in points]
    elapsed = time.perf_counter() - t0
    rows = []
    for v, _, _ in points:
        est = by_value[v].estimate
        note = f"symbols={est.symbol_count}; channels={cfg.simulation.channel_count}"
        if est.low_confidence:
            note += "; low confidence (snr below 0 dB)"
        rows.append(ModelResult(sw.variable, v, "ssfm", float(est.snr), True, note,
                                elapsed / len(points)))
    return rows


def run_sweep(cfg: ScenarioConfig, seed: Optional[int] = None, threads: int = 1) -> list:
    """Evaluate every requested model at every sweep point.

    Rows are ordered by sweep point, then by the model order of the config.
    Failures are recorded as rows with ``valid = False``.
    """
    points = _points(cfg)
    alpha_by_spans: dict = {}
    if cfg.alpha_nl.source == "fit-from-ssfm":
        alpha_by_spans = fit_alpha_from_ssfm(cfg, [n for _, _, n in points], seed, threads)
    ssfm = {}
    if "ssfm" in cfg.models:
        ssfm = {r.sweep_value: r for r in _ssfm_rows(cfg, points, seed, threads)}

    out = []
    for value, power, spans in points:
        for model in cfg.models:
            if model == "ssfm":
                out.append(ssfm[value])
                continue
            t0 = time.perf_counter()
            try:
                alpha = alpha_by_spans.get(spans) if alpha_by_spans else cfg.alpha_nl.at(spans)
                if power is None:
                    p_opt = _optimum_power(model, cfg, spans, alpha)
                    snr, valid, note = _analytic(model, cfg, p_opt, spans, alpha)
                    note = "; ".join(x for x in (f"power_dbm={mw_to_dbm(p_opt):.4f}", note) if x)
                else:
                    snr, valid, note = _analytic(model, cfg, power, spans, alpha)
            except (DomainError, ValueError, ArithmeticError) as exc:
                snr, valid, note = math.nan, False, f"evaluation failed: {exc}"
            out.append(ModelResult(cfg.sweep.variable, value, model, snr, valid, note,
                                   time.perf_counter() - t0))
    return out


# --- reports -----------------------------------------------------------------

def write_csv(results: Iterable[ModelResult], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in results:
            w.writerow(r.row())


def _json_num(x: float):
    return x if math.isfinite(x) else str(x)


def write_json(results: Sequence[ModelResult], cfg: ScenarioConfig, path, seed=None) -> None:
    echo = cfg.echo()
    echo["seed"] = cfg.simulation.seed if seed is None else seed
    doc = {
        "config": _jsonable(echo),
        "rows": [{
            "sweep_var": r.sweep_var,
            "sweep_value": r.sweep_value,
            "model": r.model,
            "snr_db": _json_num(r.snr_db),
            "snr_linear": _json_num(r.snr_linear),
            "se_bshz": _json_num(r.se_bshz),
            "valid": r.valid,
            "note": r.note,
            "runtime_s": r.runtime_s,
        } for r in results],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float):
        return _json_num(obj)
    if obj is None or isinstance(obj, (str, int, bool)):
        return obj
    return str(obj)


def read_csv(path) -> list:
    """Load a result CSV written by :func:`write_csv`."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            value = float(rec["sweep_value"])
            if rec["sweep_var"] == "spans":
                value = int(value)
            rows.append(ModelResult(rec["sweep_var"], value, rec["model"],
                                    float(rec["snr_linear"]), rec["valid"] == "true", rec["note"]))
    return rows


# --- comparison ----------------------------------------------------------------

@dataclass(frozen=True)
class GapRow:
    sweep_var: str
    sweep_value: float
    model_a: str
    model_b: str
    snr_a_db: float
    snr_b_db: float
    predicted_gap_db: float = math.nan

    @property
    def gap_db(self) -> float:
        """SNR_a (dB) - SNR_b (dB)."""
        return self.snr_a_db - self.snr_b_db

    def row(self) -> dict:
        return {
            "sweep_var": self.sweep_var,
            "sweep_value": _fmt(self.sweep_value),
            "model_a": self.model_a,
            "model_b": self.model_b,
            "snr_a_db": _fmt(self.snr_a_db),
            "snr_b_db": _fmt(self.snr_b_db),
            "gap_db": _fmt(self.gap_db),
            "predicted_gap_db": _fmt(self.predicted_gap_db),
        }


def _single_model(results, which: str, model: Optional[str]) -> tuple:
    models = list(dict.fromkeys(r.model for r in results))
    if model is None:
        if len(models) != 1:
            raise CompareError(f"result set {which} holds models {models}; name the one to compare")
        model = models[0]
    picked = [r for r in results if r.model == model]
    if not picked:
        raise CompareError(f"model {model!r} not found in result set {which}")
    return model, picked


def compare_models(results_a: Sequence[ModelResult], results_b: Optional[Sequence[ModelResult]] = None,
                   model_a: Optional[str] = None, model_b: Optional[str] = None,
                   spans: Optional[int] = None) -> list:
    """Per-point dB gaps between two models at shared sweep points.

    With ``results_b`` omitted both models are taken from ``results_a``.
    When one side is the GN model, the gap predicted by the first-order dB
    approximation, E_dB * c / SNR_GN with c = (1 - 1/N)/2, is attached;
    ``spans`` supplies N for power sweeps.
    """
    if results_b is None:
        results_b = results_a
    model_a, a = _single_model(results_a, "a", model_a)
    model_b, b = _single_model(results_b, "b", model_b)
    vars_ = {r.sweep_var for r in a} | {r.sweep_var for r in b}
    if len(vars_) != 1:
        raise CompareError(f"result sets sweep different variables: {sorted(vars_)}")
    b_by = {r.sweep_value: r for r in b}
    shared = [r for r in a if r.sweep_value in b_by]
    if not shared:
        raise CompareError("result sets share no sweep points (disjoint grids)")
    out = []
    for ra in shared:
        rb = b_by[ra.sweep_value]
        if not (ra.valid and rb.valid):
            continue
        predicted = math.nan
        gn = ra if model_a == "gn" else rb if model_b == "gn" else None
        n = int(ra.sweep_value) if ra.sweep_var == "spans" else spans
        if gn is not None and n is not None and 0 < gn.snr_linear < math.inf:
            predicted = E_DB * droop_gap(n) / gn.snr_linear
            if gn is rb:
                predicted = -predicted
        out.append(GapRow(ra.sweep_var, ra.sweep_value, model_a, model_b,
                          ra.snr_db, rb.snr_db, predicted))
    return out


def write_gaps(rows: Iterable[GapRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=GAP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r.row())
