"""One-dimensional parameter sweeps written as CSV.

Columns, in order:

    index       sweep point number, from 0
    variable    swept quantity (sensing_time, rho0, distance, frequency, tx_aperture)
    value       swept value in file units (s, fraction, m, GHz, m)
    rho0, rho1  allocation used for E and R
    t_sense_s   sensing time rho0 * T in seconds
    P_r_W       received power after t_sense_s of sensing
    P_r_r_W     echo power back at the base station
    E_Ws        harvested energy over the frame
    R_bits_Hz   achievable rate over the frame
    h_mis       misalignment coefficient after t_sense_s
    region      propagation region of the forward link
    warnings    "; "-separated notes such as absorption band clamping
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields

import numpy as np

from .config import ScenarioConfig
from .link import SystemParams, received_power, reflected_power, snapshot
from .propagation import AntennaSpec


@dataclass(frozen=True)
class SweepRecord:
    index: int
    variable: str
    value: float
    rho0: float
    rho1: float
    t_sense_s: float
    P_r_W: float
    P_r_r_W: float
    E_Ws: float
    R_bits_Hz: float
    h_mis: float
    region: str
    warnings: str


COLUMNS = tuple(f.name for f in fields(SweepRecord))
_INTS = {"index"}
_STRS = {"variable", "region", "warnings"}


def sweep_values(cfg: ScenarioConfig) -> np.ndarray:
    lo, hi = cfg.sweep.bounds(cfg.params)
    return np.linspace(lo, hi, cfg.sweep.steps)


def point_params(cfg: ScenarioConfig, value: float) -> tuple[SystemParams, float]:
    """Parameters and rho0 for one sweep point."""
    base, sw = cfg.params, cfg.sweep
    var = sw.variable
    if var == "sensing_time":
        return base, min(max(value / base.total_time, 0.0), 1.0)
    if var == "rho0":
        return base, value
    if var == "distance":
        return base.with_(distance=value), sw.rho0
    if var == "frequency":
        return base.with_(frequency=value * 1e9), sw.rho0
    if var == "tx_aperture":
        changes = {"bs_tx": AntennaSpec(value, base.bs_tx.aperture_efficiency)}
        if sw.scale_rx_with_tx:
            ratio = base.user_rx.aperture_diameter / base.bs_tx.aperture_diameter
            changes["user_rx"] = AntennaSpec(value * ratio, base.user_rx.aperture_efficiency)
        return base.with_(**changes), sw.rho0
    raise ValueError(f"unknown sweep variable {var!r}")


def evaluate_point(cfg: ScenarioConfig, index: int, value: float) -> SweepRecord:
    params, rho0 = point_params(cfg, float(value))
    rho1 = cfg.sweep.rho1
    t = rho0 * params.total_time
    snap = snapshot(params, t)
    return SweepRecord(
        index=index,
        variable=cfg.sweep.variable,
        value=float(value),
        rho0=rho0,
        rho1=rho1,
        t_sense_s=t,
        P_r_W=received_power(params, t),
        P_r_r_W=reflected_power(params, t),
        E_Ws=float(snap.energy(rho0, rho1)),
        R_bits_Hz=float(snap.rate(rho0, rho1)),
        h_mis=snap.h_mis,
        region=snap.region.value,
        warnings="; ".join(snap.warnings),
    )


def run_sweep(cfg: ScenarioConfig) -> list[SweepRecord]:
    return [evaluate_point(cfg, i, v) for i, v in enumerate(sweep_values(cfg))]


def _cell(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def records_to_csv(records, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow([_cell(v) for v in asdict(rec).values()])


def records_to_string(records) -> str:
    buf = io.StringIO()
    records_to_csv(records, buf)
    return buf.getvalue()


def read_records(fh) -> list[SweepRecord]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        kw = {k: int(v) if k in _INTS else v if k in _STRS else float(v) for k, v in row.items()}
        out.append(SweepRecord(**kw))
    return out
