"""Scenario files: TOML ingestion, validation and unit normalization.

Powers are given in dBm, rates in GHz/Gbaud, lengths in km and noise
figures in dB; everything is converted to mW, Hz and linear units here.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .chain import MultiplexSpec, fill_in_efficiency
from .droop import DomainError, PhysicalNoiseSpec, ase_beta, dbm_to_mw, from_db
from .oracle.amplifier import CG, COP
from .oracle.fiber import FiberPhysical, StepControl
from .oracle.link import LinkScenario
from .oracle.transmitter import FORMATS, TransmitterConfig

MODELS = ("gdf", "gn", "gdf-ub", "gdf-lb", "gdf-dbapprox", "cop-gdf", "cg-gdf", "tu", "tl", "ssfm")
SWEEP_VARIABLES = ("power", "spans")
ALPHA_SOURCES = ("explicit", "table", "fit-from-ssfm")


class ScenarioError(ValueError):
    """Invalid scenario file. ``key`` names the offending entry when known."""

    def __init__(self, message: str, key: Optional[str] = None, path=None, line: Optional[int] = None):
        self.key = key
        self.path = path
        self.line = line
        where = f"{path}" if path else "scenario"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class LinkSection:
    spans: int
    span_length: float          # km
    attenuation: float          # dB/km
    dispersion: float           # ps/nm/km
    nonlinear_index: float      # m^2/W
    effective_area: float       # m^2
    noise_figure: float         # linear
    amplifier_mode: str = COP
    inband_filter: bool = True

    @property
    def span_loss(self) -> float:
        return 10.0 ** (-self.attenuation * self.span_length / 10.0)

    def fiber(self) -> FiberPhysical:
        return FiberPhysical(self.attenuation, self.dispersion, self.nonlinear_index,
                             self.effective_area, self.span_length)


@dataclass(frozen=True)
class MultiplexSection:
    format: str
    channel_count: int
    symbol_rate: float          # baud
    channel_spacing: float      # Hz
    rolloff: float
    signal_modes: int = 1
    amplified_modes: int = 1
    tributary_bandwidth: Optional[float] = None
    amp_bandwidth: Optional[float] = None

    @property
    def bandwidth(self) -> float:
        return self.tributary_bandwidth or self.symbol_rate


@dataclass(frozen=True)
class SimulationSection:
    channel_count: int = 5
    symbols_per_run: int = 4096
    samples_per_symbol: int = 16
    max_nl_phase: float = 5e-4
    seed: int = 1


@dataclass(frozen=True)
class SweepSection:
    variable: str
    start: float
    stop: float
    step: float
    fixed_power: Optional[float] = None     # mW, span sweeps only; None = per-model optimum

    def values(self) -> np.ndarray:
        """Sweep grid, inclusive of ``stop`` (dBm for power, integers for spans)."""
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        grid = self.start + self.step * np.arange(count)
        if self.variable == "spans":
            return np.unique(np.rint(grid).astype(int))
        return np.round(grid, 9)


@dataclass(frozen=True)
class AlphaSection:
    source: str
    value: Optional[float] = None               # mW^-2
    table_spans: tuple = ()
    table_values: tuple = ()                    # mW^-2
    fit_power: Optional[float] = None           # mW

    def at(self, spans: int) -> float:
        """Coefficient for a given span count (tables are interpolated in dB)."""
        if self.source == "explicit":
            return self.value
        if self.source == "table":
            db = np.interp(spans, self.table_spans, 10 * np.log10(self.table_values))
            return float(10 ** (db / 10))
        raise ScenarioError("alpha_nl must be fitted before use", key="alpha_nl.source")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    link: LinkSection
    multiplex: MultiplexSection
    models: tuple
    sweep: SweepSection
    alpha_nl: AlphaSection
    simulation: SimulationSection = SimulationSection()
    center_frequency: float = 193.41e12
    source: Optional[str] = None

    def noise(self) -> PhysicalNoiseSpec:
        return PhysicalNoiseSpec(self.link.noise_figure, self.multiplex.bandwidth,
                                 modes=self.multiplex.signal_modes,
                                 center_frequency=self.center_frequency)

    @property
    def beta(self) -> float:
        """Per-tributary ASE power per amplifier, mW."""
        return ase_beta(self.noise(), self.link.span_loss)

    def mux(self, per_tributary_power: float = 1.0) -> MultiplexSpec:
        m = self.multiplex
        amp_bw = m.amp_bandwidth
        if amp_bw is None:
            amp_bw = m.channel_count * m.channel_spacing
        return MultiplexSpec(m.signal_modes, m.channel_count, m.bandwidth, amp_bw,
                             amplified_modes=m.amplified_modes,
                             per_tributary_power=per_tributary_power)

    @property
    def eta_a(self) -> float:
        return fill_in_efficiency(self.mux())

    def transmitter(self, per_tributary_power: float = 1.0, seed: Optional[int] = None) -> TransmitterConfig:
        s, m = self.simulation, self.multiplex
        return TransmitterConfig(
            format=m.format, channel_count=s.channel_count, symbol_rate=m.symbol_rate,
            channel_spacing=m.channel_spacing, rolloff=m.rolloff,
            symbols_per_run=s.symbols_per_run, samples_per_symbol=s.samples_per_symbol,
            rng_seed=s.seed if seed is None else seed,
            per_tributary_power=per_tributary_power, center_frequency=self.center_frequency)

    def link_scenario(self, spans: Optional[int] = None, seed: Optional[int] = None,
                      ase: bool = True) -> LinkScenario:
        """Desk-scale SSFM scenario; the amplifier band follows the in-band filter
        setting (unfiltered ASE fills the whole simulated band)."""
        seed = self.simulation.seed if seed is None else seed
        return LinkScenario(
            fiber=self.link.fiber(), spans=spans or self.link.spans,
            transmitter=self.transmitter(seed=seed), noise_figure=self.link.noise_figure,
            amplifier_mode=self.link.amplifier_mode, ase=ase,
            inband_filter=self.link.inband_filter,
            step=StepControl(self.simulation.max_nl_phase), seed=seed)

    def echo(self) -> dict:
        """Plain-data view for report headers."""
        out = asdict(self)
        out["models"] = list(self.models)
        out["derived"] = {"beta_mw": self.beta, "eta_a": self.eta_a}
        return out


# --- parsing helpers -------------------------------------------------------

def _line_of(text: str, key: str) -> Optional[int]:
    """Best-effort line number of ``key = ...`` inside its [section]."""
    section, _, leaf = key.rpartition(".")
    current = ""
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s.strip("[]").strip()
            continue
        if current == section and s.startswith(leaf) and s[len(leaf):].lstrip().startswith("="):
            return i
    return None


class _Reader:
    def __init__(self, data: dict, text: str, path):
        self.data, self.text, self.path = data, text, path

    def fail(self, key: str, message: str):
        raise ScenarioError(f"{key}: {message}", key=key, path=self.path, line=_line_of(self.text, key))

    def section(self, name: str, required: bool = True) -> dict:
        sec = self.data.get(name)
        if sec is None:
            if required:
                raise ScenarioError(f"missing section [{name}]", key=name, path=self.path)
            return {}
        if not isinstance(sec, dict):
            self.fail(name, "must be a table")
        return sec

    def get(self, sec: dict, prefix: str, key: str, kind, default=..., check=None, why=""):
        full = f"{prefix}.{key}"
        if key not in sec:
            if default is ...:
                raise ScenarioError(f"missing required key {full}", key=full, path=self.path)
            return default
        val = sec[key]
        if kind is float and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if kind is int and isinstance(val, float) and val.is_integer():
            val = int(val)
        if not isinstance(val, kind) or (kind in (int, float) and isinstance(val, bool)):
            self.fail(full, f"expected {kind.__name__}, got {type(val).__name__}")
        if check is not None and not check(val):
            self.fail(full, why or f"invalid value {val!r}")
        return val


def _positive(x):
    return x > 0


def parse_scenario(text: str, path=None) -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        context = ""
        if line is not None:
            lines = text.splitlines()
            if 0 < line <= len(lines):
                context = f" near {lines[line - 1].strip()!r}"
        raise ScenarioError(f"parse error: {exc}{context}", path=path, line=line) from None
    r = _Reader(data, text, path)

    name = data.get("name", Path(path).stem if path else "scenario")
    if not isinstance(name, str):
        r.fail("name", "expected str")

    ln = r.section("link")
    mode = r.get(ln, "link", "amplifier_mode", str, COP, lambda v: v in (COP, CG),
                 "must be 'cop' or 'cg'")
    if "span_loss_db" in ln and "attenuation_db_per_km" in ln:
        r.fail("link.span_loss_db", "give either span_loss_db or attenuation_db_per_km, not both")
    length = r.get(ln, "link", "span_length_km", float, check=_positive, why="must be positive")
    if "span_loss_db" in ln:
        loss_db = r.get(ln, "link", "span_loss_db", float, check=lambda v: v >= 0, why="must be >= 0")
        atten = loss_db / length
    else:
        atten = r.get(ln, "link", "attenuation_db_per_km", float, check=lambda v: v >= 0,
                      why="must be >= 0")
    link = LinkSection(
        spans=r.get(ln, "link", "spans", int, check=lambda v: v >= 1, why="must be >= 1"),
        span_length=length,
        attenuation=atten,
        dispersion=r.get(ln, "link", "dispersion_ps_nm_km", float, 17.0),
        nonlinear_index=r.get(ln, "link", "nonlinear_index_m2_w", float, 2.6e-20,
                              lambda v: v >= 0, "must be >= 0"),
        effective_area=r.get(ln, "link", "effective_area_um2", float, 80.0, _positive,
                             "must be positive") * 1e-12,
        noise_figure=from_db(r.get(ln, "link", "noise_figure_db", float, check=lambda v: v >= 0,
                                   why="must be >= 0 dB")),
        amplifier_mode=mode,
        inband_filter=r.get(ln, "link", "inband_filter", bool, True),
    )

    mx = r.section("multiplex")
    fmt = r.get(mx, "multiplex", "format", str, "PDM-QPSK", lambda v: v in FORMATS,
                f"must be one of {', '.join(FORMATS)}")
    rs = r.get(mx, "multiplex", "symbol_rate_gbaud", float, check=_positive, why="must be positive") * 1e9
    spacing = r.get(mx, "multiplex", "channel_spacing_ghz", float, check=_positive,
                    why="must be positive") * 1e9
    trib = mx.get("tributary_bandwidth_ghz")
    amp_bw = mx.get("amp_bandwidth_ghz")
    multiplex = MultiplexSection(
        format=fmt,
        channel_count=r.get(mx, "multiplex", "channel_count", int, check=lambda v: v >= 1,
                            why="must be >= 1"),
        symbol_rate=rs,
        channel_spacing=spacing,
        rolloff=r.get(mx, "multiplex", "rolloff", float, 0.02, lambda v: 0 <= v < 1,
                      "must lie in [0, 1)"),
        signal_modes=r.get(mx, "multiplex", "signal_modes", int, 1, _positive, "must be >= 1"),
        amplified_modes=r.get(mx, "multiplex", "amplified_modes", int, 1, _positive, "must be >= 1"),
        tributary_bandwidth=None if trib is None else
        r.get(mx, "multiplex", "tributary_bandwidth_ghz", float, check=_positive) * 1e9,
        amp_bandwidth=None if amp_bw is None else
        r.get(mx, "multiplex", "amp_bandwidth_ghz", float, check=_positive) * 1e9,
    )

    sm = r.section("simulation", required=False)
    sim = SimulationSection(
        channel_count=r.get(sm, "simulation", "channel_count", int, 5, _positive, "must be >= 1"),
        symbols_per_run=r.get(sm, "simulation", "symbols_per_run", int, 4096, lambda v: v >= 2,
                              "must be >= 2"),
        samples_per_symbol=r.get(sm, "simulation", "samples_per_symbol", int, 16, lambda v: v >= 2,
                                 "must be >= 2"),
        max_nl_phase=r.get(sm, "simulation", "max_nl_phase", float, 5e-4, _positive, "must be positive"),
        seed=r.get(sm, "simulation", "seed", int, 1, lambda v: v >= 0, "must be >= 0"),
    )

    models = data.get("models")
    if models is None:
        raise ScenarioError("missing required key models", key="models", path=path)
    if not isinstance(models, list) or not all(isinstance(m, str) for m in models):
        r.fail("models", "expected a list of model names")
    if not models:
        r.fail("models", "at least one model is required")
    bad = [m for m in models if m not in MODELS]
    if bad:
        r.fail("models", f"unknown model(s) {bad}; choose from {', '.join(MODELS)}")
    if len(set(models)) != len(models):
        r.fail("models", "duplicate model names")

    sw = r.section("sweep")
    var = r.get(sw, "sweep", "variable", str, check=lambda v: v in SWEEP_VARIABLES,
                why="must be 'power' or 'spans'")
    start = r.get(sw, "sweep", "start", float)
    stop = r.get(sw, "sweep", "stop", float)
    step = r.get(sw, "sweep", "step", float, check=_positive, why="must be positive")
    if stop < start:
        r.fail("sweep.stop", "sweep range is empty (stop < start)")
    fixed = None
    if var == "spans":
        if start < 1:
            r.fail("sweep.start", "span sweeps start at >= 1")
        if sw.get("power_dbm") == "optimum":
            if "ssfm" in models:
                r.fail("sweep.power_dbm", "'optimum' is only available for analytic models")
        else:
            fixed = dbm_to_mw(r.get(sw, "sweep", "power_dbm", float))
    sweep = SweepSection(var, start, stop, step, fixed)

    al = r.section("alpha_nl", required=False)
    has_ssfm = "ssfm" in models
    default_source = "explicit" if ("value" in al or "value_db" in al) else (
        "table" if "table" in al else "fit-from-ssfm")
    source = r.get(al, "alpha_nl", "source", str, default_source, lambda v: v in ALPHA_SOURCES,
                   f"must be one of {', '.join(ALPHA_SOURCES)}")
    value, spans_t, values_t, fit_power = None, (), (), None
    if source == "explicit":
        if "value" in al and "value_db" in al:
            r.fail("alpha_nl.value", "give either value or value_db, not both")
        if "value_db" in al:
            value = from_db(r.get(al, "alpha_nl", "value_db", float))
        elif "value" in al:
            value = r.get(al, "alpha_nl", "value", float, check=lambda v: v >= 0, why="must be >= 0")
        else:
            raise ScenarioError("explicit alpha_nl needs value or value_db", key="alpha_nl.value",
                                path=path)
    elif source == "table":
        tab = al.get("table")
        if not isinstance(tab, dict) or "spans" not in tab or "value_db" not in tab:
            r.fail("alpha_nl.table", "expected a table with 'spans' and 'value_db' lists")
        spans_t = tuple(int(s) for s in tab["spans"])
        values_t = tuple(from_db(float(v)) for v in tab["value_db"])
        if len(spans_t) != len(values_t) or not spans_t:
            r.fail("alpha_nl.table", "'spans' and 'value_db' must be nonempty and of equal length")
        if list(spans_t) != sorted(set(spans_t)):
            r.fail("alpha_nl.table", "'spans' must be strictly increasing")
    else:
        if not has_ssfm:
            raise ScenarioError("an explicit alpha_nl is required when ssfm is not among the models",
                                key="alpha_nl.source", path=path, line=_line_of(text, "alpha_nl.source"))
        fit_power = dbm_to_mw(r.get(al, "alpha_nl", "fit_power_dbm", float, -10.0))
    alpha = AlphaSection(source, value, spans_t, values_t, fit_power)

    cfg = ScenarioConfig(
        name=name, link=link, multiplex=multiplex, models=tuple(models), sweep=sweep,
        alpha_nl=alpha, simulation=sim,
        center_frequency=float(data.get("center_frequency_thz", 193.41)) * 1e12,
        source=str(path) if path else None,
    )
    try:
        cfg.eta_a
    except DomainError as exc:
        raise ScenarioError(str(exc), key="multiplex", path=path) from None
    if has_ssfm:
        try:
            cfg.transmitter()
            cfg.link_scenario()
        except ValueError as exc:
            raise ScenarioError(f"simulation: {exc}", key="simulation", path=path) from None
    return cfg


def load_scenario(path) -> ScenarioConfig:
    """Read and validate a scenario file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read file: {exc.strerror}", path=path) from None
    return parse_scenario(text, path=p)


def bundled_scenario(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. ``case_a``)."""
    p = Path(__file__).parent / "scenarios" / f"{name}.toml"
    if not p.exists():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return p
