"""Propagation primitives for a THz aperture link.

Aperture gains, near/far-field region classification and path loss,
Gaussian-beam geometry, misalignment fading, beam collection efficiency
and Rician multipath power.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s

# Empirical gain reduction coefficient for Fresnel-zone operation.
ALPHA_E = 0.06
# Linear gain at which the Fresnel-zone correction switches branch (10 dB).
GAIN_BRANCH_THRESHOLD = 10.0


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a formula."""


class BelowGainFloorError(DomainError):
    """Distance is below d_min, where the Fresnel-zone gain factor is negative."""


def wavelength(frequency: float) -> float:
    if frequency <= 0:
        raise DomainError(f"frequency must be positive, got {frequency}")
    return SPEED_OF_LIGHT / frequency


@dataclass(frozen=True)
class AntennaSpec:
    """Circular aperture antenna.

    Attributes:
        aperture_diameter: Physical aperture diameter D in metres.
        aperture_efficiency: Aperture efficiency in (0, 1].
    """

    aperture_diameter: float
    aperture_efficiency: float

    def __post_init__(self):
        if not self.aperture_diameter > 0:
            raise DomainError(f"aperture_diameter must be > 0, got {self.aperture_diameter}")
        if not 0 < self.aperture_efficiency <= 1:
            raise DomainError(
                f"aperture_efficiency must be in (0, 1], got {self.aperture_efficiency}"
            )

    @property
    def radius(self) -> float:
        return self.aperture_diameter / 2.0

    @property
    def area(self) -> float:
        return math.pi * self.radius**2


class RegionClass(enum.Enum):
    REACTIVE = "reactive"
    FRESNEL_ZONE = "fresnel_zone"
    FAR_FIELD = "far_field"
    BELOW_GAIN_FLOOR = "below_gain_floor"


@dataclass(frozen=True)
class RegionInfo:
    region: RegionClass
    reactive_boundary: float  # d_r
    min_distance: float  # d_min
    rayleigh_distance: float  # d_R

    @property
    def far_field_start(self) -> float:
        return max(1.0, self.rayleigh_distance)


def antenna_gain(spec: AntennaSpec, wavelength: float) -> float:
    """Aperture gain eta * (pi D / lambda)^2 (linear)."""
    if wavelength <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    return spec.aperture_efficiency * (math.pi * spec.aperture_diameter / wavelength) ** 2


def min_gain_distance(wavelength: float, tx_gain: float) -> float:
    """Smallest distance at which the Fresnel-zone gain factor is non-negative."""
    scale = 2.0 if tx_gain >= GAIN_BRANCH_THRESHOLD else 4.0
    return scale * wavelength * math.sqrt(ALPHA_E) * tx_gain / math.pi**2


def classify_region(d: float, wavelength: float, tx: AntennaSpec) -> RegionInfo:
    """Classify distance ``d`` into one propagation region of the transmit aperture.

    The radiating near field spans ``[max(d_min, d_r), max(1, d_R))``; the far
    field starts at ``max(1, d_R)`` so the four regions partition ``d > 0``.
    """
    if d <= 0:
        raise DomainError(f"distance must be positive, got {d}")
    if wavelength <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    D = tx.aperture_diameter
    d_rayleigh = 2.0 * D * (D / wavelength)
    d_reactive = 0.62 * math.sqrt(D**3 / wavelength)
    d_min = min_gain_distance(wavelength, antenna_gain(tx, wavelength))

    if d <= d_reactive:
        region = RegionClass.REACTIVE
    elif d >= max(1.0, d_rayleigh):
        region = RegionClass.FAR_FIELD
    elif d < d_min:
        region = RegionClass.BELOW_GAIN_FLOOR
    else:
        region = RegionClass.FRESNEL_ZONE
    return RegionInfo(region, d_reactive, d_min, d_rayleigh)


def gain_reduction_factor(d: float, wavelength: float, tx_gain: float) -> float:
    """Fresnel-zone reduction factor gamma_A = 1 - (d_min / d)^2."""
    if d <= 0 or wavelength <= 0 or tx_gain <= 0:
        raise DomainError("distance, wavelength and gain must be positive")
    d_min = min_gain_distance(wavelength, tx_gain)
    if d < d_min:
        raise BelowGainFloorError(f"d={d} m is below d_min={d_min} m")
    return 1.0 - (d_min / d) ** 2


def free_space_path_loss(d: float, wavelength: float) -> float:
    return wavelength**2 / (4.0 * math.pi * d) ** 2


def path_loss(d: float, wavelength: float, tx: AntennaSpec) -> tuple[float, RegionClass]:
    """Linear path-loss factor and the region it was evaluated in.

    Reactive and below-gain-floor distances return zero rather than raising,
    so distance sweeps run through them.
    """
    info = classify_region(d, wavelength, tx)
    if info.region is RegionClass.FAR_FIELD:
        return free_space_path_loss(d, wavelength), info.region
    if info.region is RegionClass.FRESNEL_ZONE:
        gamma = gain_reduction_factor(d, wavelength, antenna_gain(tx, wavelength))
        return free_space_path_loss(d, wavelength) * gamma, info.region
    return 0.0, info.region


def rayleigh_range(w0: float, wavelength: float) -> float:
    return math.pi * w0**2 / wavelength


def beam_radius(d: float, w0: float, wavelength: float) -> float:
    """Gaussian beam radius W(d) = w0 sqrt(1 + (d/d0)^2)."""
    if w0 <= 0 or wavelength <= 0:
        raise DomainError("beam waist and wavelength must be positive")
    if d < 0:
        raise DomainError(f"distance must be non-negative, got {d}")
    return w0 * math.sqrt(1.0 + (d / rayleigh_range(w0, wavelength)) ** 2)


def _erf_ratio(eps: float) -> float:
    # sqrt(pi) erf(eps) / (2 eps exp(-eps^2)); series for small eps avoids 0/0.
    if eps < 1e-4:
        return 1.0 + 2.0 * eps**2 / 3.0
    if eps > 26.0:
        # exp(eps^2) overflows; the receiver dwarfs the beam and pointing loss vanishes
        return math.inf
    return math.sqrt(math.pi) * math.erf(eps) * math.exp(eps**2) / (2.0 * eps)


def pointing_geometry(receiver_radius: float, beam_radius: float) -> tuple[float, float]:
    """Return (S0, R_ebw) for a circular receiver in a Gaussian beam.

    S0 is the collected power fraction at perfect alignment and R_ebw the
    equivalent beamwidth of the pointing-loss Gaussian.
    """
    if receiver_radius <= 0 or beam_radius <= 0:
        raise DomainError("receiver radius and beam radius must be positive")
    eps = math.sqrt(math.pi) * receiver_radius / (math.sqrt(2.0) * beam_radius)
    s0 = math.erf(eps) ** 2
    r_ebw = beam_radius * math.sqrt(_erf_ratio(eps))
    return s0, r_ebw


@dataclass(frozen=True)
class BeamGeometry:
    waist_w0: float
    rayleigh_range_d0: float
    beam_radius_Rd: float
    receiver_radius_r: float
    collected_fraction_S0: float
    equivalent_beamwidth_Rebw: float

    @classmethod
    def at(cls, d: float, w0: float, wavelength: float, receiver_radius: float) -> "BeamGeometry":
        rd = beam_radius(d, w0, wavelength)
        s0, r_ebw = pointing_geometry(receiver_radius, rd)
        return cls(w0, rayleigh_range(w0, wavelength), rd, receiver_radius, s0, r_ebw)


def misalignment_error(t, l0: float, alpha: float):
    """Radial pointing error after ``t`` seconds of sensing: l0 exp(-alpha t)."""
    if l0 < 0 or alpha < 0:
        raise DomainError("l0 and alpha must be non-negative")
    if np.any(np.asarray(t) < 0):
        raise DomainError("sensing time must be non-negative")
    if np.ndim(t) == 0:
        return l0 * math.exp(-alpha * t)
    return l0 * np.exp(-alpha * np.asarray(t, dtype=float))


def misalignment_coefficient(l_mis, s0: float, r_ebw: float):
    """h_mis = S0 exp(-2 l_mis^2 / R_ebw^2)."""
    if r_ebw <= 0:
        raise DomainError("equivalent beamwidth must be positive")
    return s0 * np.exp(-2.0 * np.square(l_mis) / r_ebw**2)


def beam_collection_efficiency(area_tx: float, area_rx: float, wavelength: float, d: float) -> float:
    """Gaussian-beam collection efficiency 1 - exp(-A_tx A_rx / (lambda d)^2)."""
    if min(area_tx, area_rx, wavelength, d) <= 0:
        raise DomainError("areas, wavelength and distance must be positive")
    return -math.expm1(-area_tx * area_rx / (wavelength**2 * d**2))


@dataclass(frozen=True)
class FadingModel:
    """Rician multipath with unit mean-square amplitude.

    ``sample_count=None`` selects the deterministic mean (|h_f|^2 = 1);
    otherwise ``sample_count`` seeded draws are taken.
    """

    rician_K: float = 1.0
    sample_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.rician_K >= 0:
            raise DomainError(f"Rician K must be >= 0, got {self.rician_K}")
        if self.sample_count is not None and self.sample_count < 1:
            raise DomainError("sample_count must be >= 1")

    @property
    def is_monte_carlo(self) -> bool:
        return self.sample_count is not None

    @classmethod
    def deterministic(cls, rician_K: float = 1.0) -> "FadingModel":
        return cls(rician_K)

    @classmethod
    def monte_carlo(cls, rician_K: float, sample_count: int = 1000, seed: int = 0) -> "FadingModel":
        return cls(rician_K, sample_count, seed)


def fading_power(model: FadingModel) -> np.ndarray:
    """|h_f|^2 as an array: ``[1.0]`` in deterministic mode, else seeded Rician draws.

    The Rician amplitude uses nu^2 = K/(K+1) and 2 sigma^2 = 1/(K+1), so
    E[|h_f|^2] = 1 for every K.
    """
    if not model.is_monte_carlo:
        return np.ones(1)
    n = model.sample_count
    if math.isinf(model.rician_K):
        return np.ones(n)
    K = model.rician_K
    nu = math.sqrt(K / (K + 1.0))
    sigma = math.sqrt(0.5 / (K + 1.0))
    rng = np.random.default_rng(model.seed)
    z = rng.standard_normal((2, n))
    return (nu + sigma * z[0]) ** 2 + (sigma * z[1]) ** 2
