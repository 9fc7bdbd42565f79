"""Molecular absorption coefficient k(f) and Beer-Lambert attenuation.

Two providers are available: a six-line water-vapour/oxygen fit valid over
100-450 GHz (:class:`LineModel`) and a linearly interpolated table
(:class:`TableProvider`), e.g. loaded from measured or ITU data.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .propagation import SPEED_OF_LIGHT, DomainError

LINE_BAND_HZ = (100e9, 450e9)


class OutOfBandError(DomainError):
    """Frequency outside the provider's validity band."""


@dataclass(frozen=True)
class Atmosphere:
    relative_humidity: float = 0.5
    temperature: float = 25.0  # degC
    pressure: float = 101325.0  # Pa

    def __post_init__(self):
        if not 0.0 <= self.relative_humidity <= 1.0:
            raise DomainError(f"relative_humidity must be in [0, 1], got {self.relative_humidity}")
        if not self.pressure > 0:
            raise DomainError(f"pressure must be positive, got {self.pressure}")


def saturation_pressure(temperature: float, pressure: float) -> float:
    """Buck (1981) saturation vapour pressure of water over liquid, in Pa."""
    p_hpa = pressure / 100.0
    enhancement = 1.0007 + 3.46e-6 * p_hpa
    return 100.0 * 6.1121 * enhancement * math.exp(17.502 * temperature / (240.97 + temperature))


def mixing_ratio(atm: Atmosphere) -> float:
    """Volume mixing ratio of water vapour, RH * p_sat(T) / p."""
    return atm.relative_humidity * saturation_pressure(atm.temperature, atm.pressure) / atm.pressure


# (centre wavenumber in cm^-1, strength(mu), width(mu)) for the six lines.
# The first line is oxygen at 118.75 GHz and scales with the dry fraction.
def _line_terms(mu: float) -> list[tuple[float, float, float]]:
    dry = 1.0 - mu
    return [
        (3.96, 5.159e-5 * dry * (-6.65e-5 * dry + 0.0159), (-2.09e-4 * dry + 0.05) ** 2),
        (6.11, 0.1925 * mu * (0.1350 * mu + 0.0318), (0.4241 * mu + 0.0998) ** 2),
        (10.84, 0.2251 * mu * (0.1314 * mu + 0.0297), (0.4127 * mu + 0.0932) ** 2),
        (12.68, 2.053 * mu * (0.1717 * mu + 0.0306), (0.5394 * mu + 0.0961) ** 2),
        (14.65, 0.177 * mu * (0.0832 * mu + 0.0213), (0.2615 * mu + 0.0668) ** 2),
        (14.94, 2.146 * mu * (0.1206 * mu + 0.0277), (0.3789 * mu + 0.0871) ** 2),
    ]


@dataclass(frozen=True)
class LineModel:
    """Six absorption lines plus a polynomial continuum, valid 100-450 GHz."""

    continuum_offset: float = 2e-4
    continuum_scale: float = 0.915e-112
    continuum_power: float = 9.42
    reference_mixing_ratio: float = 0.0157

    @property
    def band(self) -> tuple[float, float]:
        return LINE_BAND_HZ

    def coefficient(self, f, mu: float):
        wavenumber = np.asarray(f, dtype=float) / (100.0 * SPEED_OF_LIGHT)
        k = sum(a / (b + (wavenumber - c) ** 2) for c, a, b in _line_terms(mu))
        k = k + mu / self.reference_mixing_ratio * (
            self.continuum_offset + self.continuum_scale * np.asarray(f, dtype=float) ** self.continuum_power
        )
        return float(k) if np.ndim(k) == 0 else k


@dataclass(frozen=True)
class TableProvider:
    """Tabulated k(f) in 1/m with linear interpolation between knots.

    The table is used as-is; the mixing ratio has no effect.
    """

    frequency_hz: tuple[float, ...]
    k_per_m: tuple[float, ...]
    source: str = field(default="", compare=False)

    def __post_init__(self):
        f = np.asarray(self.frequency_hz, dtype=float)
        k = np.asarray(self.k_per_m, dtype=float)
        if f.ndim != 1 or f.shape != k.shape or f.size < 2:
            raise DomainError("table needs at least two (frequency, k) rows of equal length")
        if np.any(np.diff(f) <= 0):
            raise DomainError("table frequencies must be strictly increasing")
        if np.any(k < 0) or not np.all(np.isfinite(k)):
            raise DomainError("table absorption coefficients must be finite and >= 0")
        object.__setattr__(self, "frequency_hz", tuple(float(x) for x in f))
        object.__setattr__(self, "k_per_m", tuple(float(x) for x in k))

    @property
    def band(self) -> tuple[float, float]:
        return self.frequency_hz[0], self.frequency_hz[-1]

    def coefficient(self, f, mu: float = 0.0):
        k = np.interp(f, self.frequency_hz, self.k_per_m)
        return float(k) if np.ndim(k) == 0 else k

    @classmethod
    def from_csv(cls, path) -> "TableProvider":
        """Load a ``frequency_hz,k_per_m`` CSV (header required)."""
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["frequency_hz", "k_per_m"]:
                raise DomainError(f"{path}: header must be 'frequency_hz,k_per_m'")
            freqs, ks = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 2:
                    raise DomainError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
                try:
                    freqs.append(float(row[0]))
                    ks.append(float(row[1]))
                except ValueError as exc:
                    raise DomainError(f"{path}:{lineno}: {exc}") from None
        return cls(tuple(freqs), tuple(ks), source=str(path))

    @classmethod
    def vacuum(cls) -> "TableProvider":
        return cls(LINE_BAND_HZ, (0.0, 0.0), source="vacuum")


AbsorptionProvider = LineModel | TableProvider


def absorption_coefficient(f: float, mu: float, provider: AbsorptionProvider) -> float:
    """k(f) in 1/m. Raises :class:`OutOfBandError` outside the provider band."""
    lo, hi = provider.band
    if not lo <= f <= hi:
        raise OutOfBandError(f"f={f / 1e9:g} GHz outside valid band {lo / 1e9:g}-{hi / 1e9:g} GHz")
    return provider.coefficient(f, mu)


def clamped_absorption_coefficient(
    f: float, mu: float, provider: AbsorptionProvider
) -> tuple[float, str | None]:
    """Like :func:`absorption_coefficient` but clamps to the band edge.

    Returns the coefficient and a warning string when clamping happened.
    """
    lo, hi = provider.band
    if lo <= f <= hi:
        return provider.coefficient(f, mu), None
    edge = min(max(f, lo), hi)
    warning = f"k(f) clamped: {f / 1e9:g} GHz outside {lo / 1e9:g}-{hi / 1e9:g} GHz, used {edge / 1e9:g} GHz"
    return provider.coefficient(edge, mu), warning


def molecular_loss(f: float, d: float, mu: float, provider: AbsorptionProvider) -> float:
    """Beer-Lambert attenuation exp(-k(f) d)."""
    if d < 0:
        raise DomainError(f"distance must be non-negative, got {d}")
    return math.exp(-absorption_coefficient(f, mu, provider) * d)
