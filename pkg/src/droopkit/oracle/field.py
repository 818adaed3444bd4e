"""Dual-polarization sampled field and its raw binary dump."""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..droop import DEFAULT_CENTER_FREQUENCY


class ConfigError(ValueError):
    """Invalid simulation configuration."""


@dataclass
class SampledField:
    """Complex baseband envelope of both polarizations, in sqrt(mW).

    ``samples`` has shape (2, n). The field is periodic over the window.
    """

    samples: np.ndarray
    sample_rate: float
    center_frequency: float = DEFAULT_CENTER_FREQUENCY

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.ndim != 2 or self.samples.shape[0] != 2:
            raise ConfigError("field samples must have shape (2, n)")
        if not self.sample_rate > 0:
            raise ConfigError("sample rate must be positive")

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    def power(self) -> float:
        """Mean total power over both polarizations, mW."""
        s = self.samples
        return float(np.mean(s.real ** 2 + s.imag ** 2) * 2)

    def frequencies(self) -> np.ndarray:
        """Baseband frequency of each FFT bin, Hz."""
        return np.fft.fftfreq(self.n, 1.0 / self.sample_rate)

    def with_samples(self, samples: np.ndarray) -> "SampledField":
        return replace(self, samples=samples)

    def copy(self) -> "SampledField":
        return replace(self, samples=self.samples.copy())


# raw dump: magic, version, sample rate, length, then (x, y) complex64 pairs
_MAGIC = b"DRPF"
_VERSION = 1
_HEADER = struct.Struct("<4sHdQ")


def write_field(path, field: SampledField) -> None:
    interleaved = np.empty((field.n, 2), dtype="<c8")
    interleaved[:, 0] = field.samples[0]
    interleaved[:, 1] = field.samples[1]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, field.sample_rate, field.n))
        fh.write(interleaved.tobytes())


def read_field(path) -> SampledField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ConfigError(f"{path}: truncated field dump")
    magic, version, rate, length = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ConfigError(f"{path}: not a field dump (bad magic {magic!r})")
    if version != _VERSION:
        raise ConfigError(f"{path}: unsupported dump version {version}")
    body = np.frombuffer(data, dtype="<c8", offset=_HEADER.size)
    if body.size != 2 * length:
        raise ConfigError(f"{path}: expected {length} samples, found {body.size // 2}")
    pairs = body.reshape(length, 2)
    return SampledField(np.ascontiguousarray(pairs.T).astype(np.complex128), rate)
