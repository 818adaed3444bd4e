"""Nyquist-WDM multiplex generation with frequency-domain root-raised-cosine shaping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from ..droop import DEFAULT_CENTER_FREQUENCY
from .field import ConfigError, SampledField

FORMATS = ("PDM-QPSK", "PDM-16QAM", "PDM-Gaussian")


@dataclass(frozen=True)
class TransmitterConfig:
    """Multiplex description. Rates in Hz/baud, power per tributary in mW
    (summed over both polarizations)."""

    format: str = "PDM-QPSK"
    channel_count: int = 5
    symbol_rate: float = 49e9
    channel_spacing: float = 50e9
    rolloff: float = 0.02
    symbols_per_run: int = 4096
    samples_per_symbol: int = 16
    rng_seed: int = 1
    per_tributary_power: float = 1.0
    center_frequency: float = DEFAULT_CENTER_FREQUENCY

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.channel_count < 1:
            raise ConfigError("channel_count must be >= 1")
        if not 0 <= self.rolloff < 1:
            raise ConfigError("rolloff must lie in [0, 1)")
        if self.symbol_rate <= 0 or self.channel_spacing <= 0:
            raise ConfigError("symbol rate and spacing must be positive")
        if self.channel_count > 1 and \
                self.channel_spacing < self.symbol_rate * (1 + self.rolloff) * (1 - 1e-9):
            raise ConfigError("channel_spacing must be >= symbol_rate * (1 + rolloff)")
        if self.symbols_per_run < 2 or self.samples_per_symbol < 2:
            raise ConfigError("symbols_per_run and samples_per_symbol must be >= 2")
        if self.channel_count * self.channel_spacing > self.sample_rate:
            raise ConfigError(
                f"aggregate bandwidth {self.channel_count * self.channel_spacing:.4g} Hz "
                f"exceeds the sample rate {self.sample_rate:.4g} Hz")
        if not self.per_tributary_power > 0:
            raise ConfigError("per_tributary_power must be positive")

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol

    @property
    def n_samples(self) -> int:
        return self.symbols_per_run * self.samples_per_symbol

    @property
    def wdm_bandwidth(self) -> float:
        return self.channel_count * self.channel_spacing

    @property
    def center_channel(self) -> int:
        return (self.channel_count - 1) // 2


def channel_bin_offsets(cfg: TransmitterConfig) -> np.ndarray:
    """Channel center offsets in FFT bins, snapped to the periodic grid."""
    df = cfg.sample_rate / cfg.n_samples
    offsets = (np.arange(cfg.channel_count) - (cfg.channel_count - 1) / 2) * cfg.channel_spacing
    return np.rint(offsets / df).astype(int)


def raised_cosine(f: np.ndarray, symbol_rate: float, rolloff: float) -> np.ndarray:
    """Raised-cosine spectrum with unit passband."""
    af = np.abs(f)
    f1 = (1 - rolloff) * symbol_rate / 2
    f2 = (1 + rolloff) * symbol_rate / 2
    out = np.where(af <= f1, 1.0, 0.0)
    if rolloff > 0:
        band = (af > f1) & (af <= f2)
        out[band] = 0.5 * (1 + np.cos(np.pi / (rolloff * symbol_rate) * (af[band] - f1)))
    return out


def rrc_response(cfg: TransmitterConfig) -> np.ndarray:
    """Root-raised-cosine transfer function on the simulation grid.

    Scaled so that unit-energy symbols yield unit mean waveform power.
    """
    f = np.fft.fftfreq(cfg.n_samples, 1.0 / cfg.sample_rate)
    return cfg.samples_per_symbol * np.sqrt(raised_cosine(f, cfg.symbol_rate, cfg.rolloff))


def draw_symbols(fmt: str, rng: np.random.Generator, count: int) -> np.ndarray:
    """Unit-average-energy symbols (normalized over the realization)."""
    if fmt == "PDM-QPSK":
        bits = rng.integers(0, 2, size=(2, count))
        return ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2)
    if fmt == "PDM-16QAM":
        levels = np.array([-3.0, -1.0, 1.0, 3.0])
        sym = levels[rng.integers(0, 4, count)] + 1j * levels[rng.integers(0, 4, count)]
    else:
        sym = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    return sym / np.sqrt(np.mean(np.abs(sym) ** 2))


def generate_multiplex(cfg: TransmitterConfig) -> tuple[SampledField, np.ndarray]:
    """Return the launched field and the reference symbols.

    Symbols have shape (channel_count, 2, symbols_per_run) and unit energy;
    the field carries ``per_tributary_power`` per channel.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n, sps = cfg.n_samples, cfg.samples_per_symbol
    symbols = np.empty((cfg.channel_count, 2, cfg.symbols_per_run), dtype=complex)
    for c in range(cfg.channel_count):
        for p in range(2):
            symbols[c, p] = draw_symbols(cfg.format, rng, cfg.symbols_per_run)

    h = rrc_response(cfg)
    amplitude = np.sqrt(cfg.per_tributary_power / 2)
    spectrum = np.zeros((2, n), dtype=complex)
    upsampled = np.zeros((2, n), dtype=complex)
    for c, shift in enumerate(channel_bin_offsets(cfg)):
        upsampled[:, ::sps] = symbols[c]
        shaped = sfft.fft(upsampled, axis=-1) * h
        spectrum += np.roll(shaped, shift, axis=-1)
    samples = sfft.ifft(spectrum, axis=-1) * amplitude
    return SampledField(samples, cfg.sample_rate, cfg.center_frequency), symbols
