"""End-to-end link quantities for the two-phase sense-then-SWIPT frame.

Phase 1 spends ``rho0 * T`` seconds sensing, shrinking the pointing error;
phase 2 splits the received power, ``rho1`` to the harvester and
``1 - rho1`` to the decoder, for the remaining ``(1 - rho0) * T`` seconds.

Everything that does not depend on ``(rho0, rho1)`` is gathered once in a
:class:`ChannelSnapshot`; the objective functions below are vectorised over
``rho0``/``rho1`` arrays and average over the fading draws stored in it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import absorption as absn
from .absorption import AbsorptionProvider, Atmosphere, LineModel
from .harvest import EnergyHarvestModel, LinearHarvester, NonlinearHarvester
from .propagation import (
    AntennaSpec,
    BeamGeometry,
    DomainError,
    FadingModel,
    RegionClass,
    antenna_gain,
    beam_collection_efficiency,
    fading_power,
    misalignment_coefficient,
    misalignment_error,
    path_loss,
    wavelength,
)

LN2 = math.log(2.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Physical and scenario constants. Defaults are the table1 preset values.

    ``bs_rx=None`` means the BS receive aperture equals the transmit aperture.
    ``harvest_split_input`` evaluates the harvester at ``rho1 * P_r`` instead
    of scaling ``f(P_r)`` by ``rho1``.
    """

    frequency: float = 300e9
    tx_power: float = 10.0
    bs_tx: AntennaSpec = AntennaSpec(0.1, 0.2)
    user_rx: AntennaSpec = AntennaSpec(0.2, 0.2)
    bs_rx: AntennaSpec | None = None
    distance: float = 20.0
    total_time: float = 100.0
    noise_power: float = 1e-8
    l0: float = 0.8
    alpha: float = 0.1
    atmosphere: Atmosphere = Atmosphere()
    eh_model: EnergyHarvestModel = NonlinearHarvester()
    fading: FadingModel = FadingModel(1.0)
    absorption: AbsorptionProvider = LineModel()
    harvest_split_input: bool = False

    def __post_init__(self):
        for name in ("frequency", "tx_power", "distance", "total_time", "noise_power"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value}")
        if self.l0 < 0:
            raise DomainError(f"l0 must be non-negative, got {self.l0}")
        if self.alpha < 0:
            raise DomainError(f"alpha must be non-negative, got {self.alpha}")

    @property
    def bs_receive(self) -> AntennaSpec:
        return self.bs_rx if self.bs_rx is not None else self.bs_tx

    @property
    def rician_K(self) -> float:
        return self.fading.rician_K

    @property
    def wavelength(self) -> float:
        return wavelength(self.frequency)

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


TABLE1 = SystemParams()


@dataclass(frozen=True)
class AllocationPoint:
    rho0: float
    rho1: float

    def __post_init__(self):
        for name in ("rho0", "rho1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")

    @property
    def degenerate(self) -> bool:
        """True when no time is left for phase 2."""
        return self.rho0 == 1.0


@dataclass(frozen=True)
class ChannelSnapshot:
    """Channel coefficients evaluated once for a parameter set."""

    params: SystemParams
    wavelength: float
    g_bs_t: float
    g_bs_r: float
    g_r: float
    pl: float
    region: RegionClass
    pl_round_trip: float
    region_round_trip: RegionClass
    h_abs: float
    beam: BeamGeometry
    eta_b: float
    hf_sq: np.ndarray = field(repr=False)
    t_sense: float
    l_mis: float
    h_mis: float
    warnings: tuple[str, ...] = ()

    # -- composite constants -------------------------------------------------

    @property
    def S0(self) -> float:
        return self.beam.collected_fraction_S0

    @property
    def R_ebw(self) -> float:
        return self.beam.equivalent_beamwidth_Rebw

    @property
    def aligned_power(self) -> np.ndarray:
        """P_r with zero pointing error, per fading draw (the C2 constant)."""
        p = self.params
        return (
            p.tx_power * self.g_bs_t * self.g_r * self.pl * self.h_abs
            * self.hf_sq * self.eta_b * self.S0**2
        )

    @property
    def C1(self) -> np.ndarray:
        return self.aligned_power / self.params.noise_power

    C2 = aligned_power

    @property
    def xi2(self) -> np.ndarray:
        return self.C1

    @property
    def _eta(self) -> np.ndarray:
        # Nonlinear model: efficiency taken at the aligned received power.
        model = self.params.eh_model
        if isinstance(model, LinearHarvester):
            return np.full_like(self.hf_sq, model.eta)
        p = self.aligned_power
        safe = np.where(p > 0, p, 1.0)
        return np.where(p > 0, model.dc_output(safe) / safe, model.small_signal_efficiency)

    @property
    def C3(self) -> np.ndarray:
        return self._eta * self.aligned_power

    @property
    def xi1(self) -> np.ndarray:
        return self.params.total_time * self.C3

    # -- rho-dependent pieces ------------------------------------------------

    def _decay(self, rho0):
        p = self.params
        return np.exp(-2.0 * p.alpha * np.asarray(rho0, dtype=float) * p.total_time)

    def misalignment_gain(self, rho0):
        """|h_mis / S0|^2 after sensing for ``rho0 * T`` seconds."""
        p = self.params
        return np.exp(-4.0 * p.l0**2 * self._decay(rho0) / self.R_ebw**2)

    def log_gain_slope(self, rho0):
        """d/d rho0 of ln(misalignment_gain): 8 alpha T l0^2 exp(-2 alpha rho0 T) / R_ebw^2."""
        p = self.params
        return 8.0 * p.alpha * p.total_time * p.l0**2 * self._decay(rho0) / self.R_ebw**2

    def received_power_samples(self, rho0) -> np.ndarray:
        """P_r per fading draw; trailing axis indexes the draws."""
        return np.multiply.outer(self.misalignment_gain(rho0), self.aligned_power)

    def received_power(self, rho0):
        return _mean(self.received_power_samples(rho0))

    def energy(self, rho0, rho1):
        """Harvested energy E in W*s."""
        rho0, rho1 = np.broadcast_arrays(np.asarray(rho0, dtype=float), np.asarray(rho1, dtype=float))
        pr = self.received_power_samples(rho0)
        r1 = rho1[..., None]
        model = self.params.eh_model
        if self.params.harvest_split_input:
            dc = model.dc_output(r1 * pr)
        else:
            dc = r1 * model.dc_output(pr)
        return _mean((1.0 - rho0)[..., None] * self.params.total_time * dc)

    def rate(self, rho0, rho1):
        """Achievable rate R in bits/Hz (time times spectral efficiency)."""
        rho0, rho1 = np.broadcast_arrays(np.asarray(rho0, dtype=float), np.asarray(rho1, dtype=float))
        snr = (1.0 - rho1)[..., None] * self.received_power_samples(rho0) / self.params.noise_power
        return _mean((1.0 - rho0)[..., None] * self.params.total_time * np.log1p(snr) / LN2)

    def dE_drho1(self, rho0, rho1):
        rho0, rho1 = _interior(rho0, rho1)
        pr = self.received_power_samples(rho0)
        model, T = self.params.eh_model, self.params.total_time
        if self.params.harvest_split_input:
            per = model.derivative(rho1[..., None] * pr) * pr
        else:
            per = model.dc_output(pr)
        return _mean((1.0 - rho0)[..., None] * T * per)

    def dE_drho0(self, rho0, rho1):
        rho0, rho1 = _interior(rho0, rho1)
        pr = self.received_power_samples(rho0)
        s = self.log_gain_slope(rho0)[..., None]
        model, T = self.params.eh_model, self.params.total_time
        r0, r1 = rho0[..., None], rho1[..., None]
        if self.params.harvest_split_input:
            x = r1 * pr
            per = T * (-model.dc_output(x) + (1.0 - r0) * model.derivative(x) * x * s)
        else:
            per = T * r1 * (-model.dc_output(pr) + (1.0 - r0) * model.derivative(pr) * pr * s)
        return _mean(per)

    def dR_drho1(self, rho0, rho1):
        rho0, rho1 = _interior(rho0, rho1)
        gain = self.received_power_samples(rho0) / self.params.noise_power
        snr = (1.0 - rho1)[..., None] * gain
        T = self.params.total_time
        return _mean(-(1.0 - rho0)[..., None] * T * gain / ((1.0 + snr) * LN2))

    def dR_drho0(self, rho0, rho1):
        return self._rate_slope(*_interior(rho0, rho1))

    def g(self, rho0):
        """Stationarity function of E in rho0 (linear harvester): (1-rho0) 8 alpha T l0^2 e^{-2 alpha rho0 T} - R_ebw^2."""
        rho0 = np.asarray(rho0, dtype=float)
        out = self.R_ebw**2 * ((1.0 - rho0) * self.log_gain_slope(rho0) - 1.0)
        return float(out) if out.ndim == 0 else out

    def h(self, rho0, rho1=0.0):
        """dR/drho0 at fixed ``rho1``, defined on the closed interval [0, 1]."""
        rho0, rho1 = np.broadcast_arrays(np.asarray(rho0, dtype=float), np.asarray(rho1, dtype=float))
        return self._rate_slope(rho0, rho1)

    def _rate_slope(self, rho0, rho1):
        snr = (1.0 - rho1)[..., None] * self.received_power_samples(rho0) / self.params.noise_power
        s = self.log_gain_slope(rho0)[..., None]
        T = self.params.total_time
        per = -T * np.log1p(snr) / LN2 + (1.0 - rho0)[..., None] * T * snr * s / ((1.0 + snr) * LN2)
        return _mean(per)


def _mean(per_sample):
    out = np.mean(per_sample, axis=-1)
    return float(out) if out.ndim == 0 else out


def _interior(rho0, rho1):
    rho0, rho1 = np.broadcast_arrays(np.asarray(rho0, dtype=float), np.asarray(rho1, dtype=float))
    if np.any(rho0 >= 1.0) or np.any(rho0 < 0.0):
        raise DomainError("derivatives are defined for 0 <= rho0 < 1")
    return rho0, rho1


def snapshot(params: SystemParams, t_sense: float = 0.0, strict_band: bool = False) -> ChannelSnapshot:
    """Evaluate every allocation-independent channel coefficient.

    Out-of-band frequencies use the band-edge absorption and record a
    warning unless ``strict_band`` is set, in which case they raise.
    """
    if t_sense < 0:
        raise DomainError(f"sensing time must be non-negative, got {t_sense}")
    lam = params.wavelength
    warnings: list[str] = []

    g_t = antenna_gain(params.bs_tx, lam)
    g_bs_r = antenna_gain(params.bs_receive, lam)
    g_r = antenna_gain(params.user_rx, lam)
    pl, region = path_loss(params.distance, lam, params.bs_tx)
    pl_rt, region_rt = path_loss(2.0 * params.distance, lam, params.bs_tx)
    if region in (RegionClass.REACTIVE, RegionClass.BELOW_GAIN_FLOOR):
        warnings.append(f"d={params.distance:g} m in {region.value} region: path loss set to 0")

    mu = absn.mixing_ratio(params.atmosphere)
    if strict_band:
        k = absn.absorption_coefficient(params.frequency, mu, params.absorption)
    else:
        k, warn = absn.clamped_absorption_coefficient(params.frequency, mu, params.absorption)
        if warn:
            warnings.append(warn)
    h_abs = math.exp(-k * params.distance)

    beam = BeamGeometry.at(params.distance, params.bs_tx.radius, lam, params.user_rx.radius)
    eta_b = beam_collection_efficiency(params.bs_tx.area, params.user_rx.area, lam, params.distance)
    l_mis = misalignment_error(t_sense, params.l0, params.alpha)
    h_mis = float(misalignment_coefficient(l_mis, beam.collected_fraction_S0, beam.equivalent_beamwidth_Rebw))

    return ChannelSnapshot(
        params=params,
        wavelength=lam,
        g_bs_t=g_t,
        g_bs_r=g_bs_r,
        g_r=g_r,
        pl=pl,
        region=region,
        pl_round_trip=pl_rt,
        region_round_trip=region_rt,
        h_abs=h_abs,
        beam=beam,
        eta_b=eta_b,
        hf_sq=fading_power(params.fading),
        t_sense=float(t_sense),
        l_mis=float(l_mis),
        h_mis=h_mis,
        warnings=tuple(warnings),
    )


def _as_snapshot(source) -> ChannelSnapshot:
    return source if isinstance(source, ChannelSnapshot) else snapshot(source)


def received_power(params: SystemParams, t_sense: float) -> float:
    """P_r = P_t G_bs-t G_r PL(d) h_abs |h_mis|^2 |h_f|^2 eta_b (mean over draws)."""
    snap = snapshot(params, t_sense)
    return float(np.mean(
        params.tx_power * snap.g_bs_t * snap.g_r * snap.pl * snap.h_abs
        * snap.h_mis**2 * snap.hf_sq * snap.eta_b
    ))


def reflected_power(params: SystemParams, t_sense: float) -> float:
    """Power of the sensing echo back at the BS, over a 2d round trip."""
    snap = snapshot(params, t_sense)
    return float(np.mean(
        params.tx_power * snap.g_bs_t * snap.g_bs_r * snap.pl_round_trip * snap.h_abs**2
        * snap.h_mis**4 * snap.hf_sq**2 * snap.eta_b**2
    ))


def capacity(p_r: float, n_r: float) -> float:
    """Spectral efficiency log2(1 + p_r / n_r)."""
    if n_r <= 0:
        raise DomainError(f"noise power must be positive, got {n_r}")
    if p_r < 0:
        raise DomainError(f"received power must be non-negative, got {p_r}")
    return math.log1p(p_r / n_r) / LN2


def harvested_energy(source, alloc: AllocationPoint) -> float:
    return _as_snapshot(source).energy(alloc.rho0, alloc.rho1)


def achievable_rate(source, alloc: AllocationPoint) -> float:
    return _as_snapshot(source).rate(alloc.rho0, alloc.rho1)


def dE_drho0(source, alloc: AllocationPoint) -> float:
    return _as_snapshot(source).dE_drho0(alloc.rho0, alloc.rho1)


def dE_drho1(source, alloc: AllocationPoint) -> float:
    return _as_snapshot(source).dE_drho1(alloc.rho0, alloc.rho1)


def dR_drho0(source, alloc: AllocationPoint) -> float:
    return _as_snapshot(source).dR_drho0(alloc.rho0, alloc.rho1)


def dR_drho1(source, alloc: AllocationPoint) -> float:
    return _as_snapshot(source).dR_drho1(alloc.rho0, alloc.rho1)
