"""Scenario files: TOML with unit-suffixed keys, layered over a named preset.

Schema (every key optional; omitted keys come from the preset)::

    preset = "table1"
    output_path = "out.csv"

    [link]        frequency_ghz, tx_power_w, distance_m, total_time_T,
                  noise_power ("-50 dBm", "1e-8 W" or a bare number in dBm),
                  l0_m, alpha_per_s, harvest_split_input
    [antennas]    bs_tx_diameter_m, bs_tx_efficiency, user_rx_diameter_m,
                  user_rx_efficiency, bs_rx_diameter_m, bs_rx_efficiency
    [atmosphere]  relative_humidity, temperature_c, pressure_pa
    [absorption]  provider ("line" | "table"), table_csv
    [harvester]   model ("nonlinear" | "linear"), eta, a0, b0, c0
    [fading]      mode ("mean" | "mc"), rician_K, samples, seed
    [solver]      bisection_tol, grid_step, max_iterations, rho1_on_grid
    [sweep]       variable, from, to, steps, rho0, rho1, scale_rx_with_tx
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .absorption import Atmosphere, LineModel, TableProvider
from .harvest import LinearHarvester, NonlinearHarvester
from .link import SystemParams, dbm_to_watts
from .optimizer import SolverConfig
from .propagation import AntennaSpec, DomainError, FadingModel

SWEEP_VARIABLES = ("sensing_time", "rho0", "distance", "frequency", "tx_aperture")
DEFAULT_PRESET = "table1"


class ConfigError(ValueError):
    """Invalid scenario file. ``field`` names the offending key when known."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


# -- value checks ------------------------------------------------------------------


def _number(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}", key)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite, got {v}", key)
    return v


def _positive(key, v):
    v = _number(key, v)
    if v <= 0:
        raise ConfigError(f"{key}: must be > 0, got {v:g}", key)
    return v


def _nonneg(key, v):
    v = _number(key, v)
    if v < 0:
        raise ConfigError(f"{key}: must be >= 0, got {v:g}", key)
    return v


def _fraction(key, v):
    v = _number(key, v)
    if not 0 <= v <= 1:
        raise ConfigError(f"{key}: must lie in [0, 1], got {v:g}", key)
    return v


def _efficiency(key, v):
    v = _number(key, v)
    if not 0 < v <= 1:
        raise ConfigError(f"{key}: must lie in (0, 1], got {v:g}", key)
    return v


def _count(key, v):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"{key}: expected a positive integer, got {v!r}", key)
    return v


def _seed(key, v):
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ConfigError(f"{key}: expected a non-negative integer, got {v!r}", key)
    return v


def _flag(key, v):
    if not isinstance(v, bool):
        raise ConfigError(f"{key}: expected true or false, got {v!r}", key)
    return v


def _text(key, v):
    if not isinstance(v, str):
        raise ConfigError(f"{key}: expected a string, got {v!r}", key)
    return v


def _choice(*options):
    def check(key, v):
        if v not in options:
            raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {v!r}", key)
        return v

    return check


_POWER_RE = re.compile(r"^\s*([-+−]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\s*(dBm|mW|W)\s*$")


def parse_power(key: str, v) -> float:
    """Power in watts from ``"-50 dBm"``, ``"1e-8 W"``, ``"0.01 mW"`` or a bare dBm number."""
    if isinstance(v, str):
        m = _POWER_RE.match(v)
        if not m:
            raise ConfigError(f"{key}: cannot parse power {v!r}; use e.g. '-50 dBm' or '1e-8 W'", key)
        value = float(m.group(1).replace("−", "-"))
        unit = m.group(2)
        if unit == "dBm":
            return dbm_to_watts(value)
        watts = value * (1e-3 if unit == "mW" else 1.0)
        if watts <= 0:
            raise ConfigError(f"{key}: power must be > 0", key)
        return watts
    return dbm_to_watts(_number(key, v))


SCHEMA = {
    "link": {
        "frequency_ghz": _positive,
        "tx_power_w": _positive,
        "distance_m": _positive,
        "total_time_T": _positive,
        "noise_power": parse_power,
        "l0_m": _nonneg,
        "alpha_per_s": _nonneg,
        "harvest_split_input": _flag,
    },
    "antennas": {
        "bs_tx_diameter_m": _positive,
        "bs_tx_efficiency": _efficiency,
        "user_rx_diameter_m": _positive,
        "user_rx_efficiency": _efficiency,
        "bs_rx_diameter_m": _positive,
        "bs_rx_efficiency": _efficiency,
    },
    "atmosphere": {
        "relative_humidity": _fraction,
        "temperature_c": _number,
        "pressure_pa": _positive,
    },
    "absorption": {
        "provider": _choice("line", "table"),
        "table_csv": _text,
    },
    "harvester": {
        "model": _choice("nonlinear", "linear"),
        "eta": _efficiency,
        "a0": _number,
        "b0": _number,
        "c0": _positive,
    },
    "fading": {
        "mode": _choice("mean", "mc"),
        "rician_K": _nonneg,
        "samples": _count,
        "seed": _seed,
    },
    "solver": {
        "bisection_tol": _positive,
        "grid_step": _positive,
        "max_iterations": _count,
        "rho1_on_grid": _flag,
    },
    "sweep": {
        "variable": _choice(*SWEEP_VARIABLES),
        "from": _number,
        "to": _number,
        "steps": _count,
        "rho0": _fraction,
        "rho1": _fraction,
        "scale_rx_with_tx": _flag,
    },
}
TOP_LEVEL = {"preset": _text, "output_path": _text}


# -- resolved config ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "rho0"
    start: float | None = None
    stop: float | None = None
    steps: int = 200
    rho0: float = 0.4
    rho1: float = 0.5
    scale_rx_with_tx: bool = False

    def bounds(self, params: SystemParams) -> tuple[float, float]:
        """Sweep range with per-variable defaults filled in."""
        defaults = {
            "sensing_time": (0.0, params.total_time),
            "rho0": (0.0, 0.99),
            "distance": (1.0, 100.0),
            "frequency": (100.0, 450.0),
            "tx_aperture": (0.1, 0.4),
        }[self.variable]
        lo = defaults[0] if self.start is None else self.start
        hi = defaults[1] if self.stop is None else self.stop
        return lo, hi


@dataclass(frozen=True)
class ScenarioConfig:
    params: SystemParams
    solver: SolverConfig = SolverConfig()
    sweep: SweepSpec = SweepSpec()
    output_path: str | None = None
    preset: str = DEFAULT_PRESET
    source: str = "<preset>"
    raw: dict = field(default_factory=dict, repr=False, compare=False)


def available_presets() -> list[str]:
    root = resources.files("thz_iscap") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def preset_data(name: str) -> dict:
    if name not in available_presets():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(available_presets())}", "preset")
    text = (resources.files("thz_iscap") / "presets" / f"{name}.toml").read_text()
    return _parse(text, f"preset {name}")


def _parse(text: str, source: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from None


def _check_keys(data: dict, source: str) -> None:
    for key, value in data.items():
        if key in TOP_LEVEL:
            TOP_LEVEL[key](key, value)
            continue
        if key not in SCHEMA:
            raise ConfigError(f"{source}: unknown key {key!r}", key)
        if not isinstance(value, dict):
            raise ConfigError(f"{source}: [{key}] must be a table", key)
        for sub in value:
            if sub not in SCHEMA[key]:
                raise ConfigError(f"{source}: unknown key '{key}.{sub}'", f"{key}.{sub}")


def _merge(base: dict, override: dict) -> dict:
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in base.items()}
    for key, value in override.items():
        if isinstance(value, dict):
            out.setdefault(key, {}).update(value)
        else:
            out[key] = value
    return out


def loads_config(text: str, preset: str | None = None, source: str = "<string>",
                 base_dir: Path | None = None) -> ScenarioConfig:
    """Parse scenario text layered over ``preset`` (or the file's own ``preset`` key)."""
    data = _parse(text, source)
    _check_keys(data, source)
    name = preset or data.get("preset") or DEFAULT_PRESET
    merged = _merge(preset_data(name), data)
    _check_keys(merged, source)
    return build_config(merged, name, source, base_dir)


def load_config(path=None, preset: str | None = None) -> ScenarioConfig:
    """Load a scenario file; with ``path=None`` return the preset alone."""
    if path is None:
        name = preset or DEFAULT_PRESET
        return build_config(preset_data(name), name, f"preset {name}")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return loads_config(text, preset, str(path), path.parent)


def build_config(data: dict, preset: str = DEFAULT_PRESET, source: str = "<dict>",
                 base_dir: Path | None = None) -> ScenarioConfig:
    v = {}
    for section, checks in SCHEMA.items():
        values = data.get(section, {})
        v[section] = {k: checks[k](f"{section}.{k}" if section != "link" else k, values[k])
                      for k in values}
    link, ant, atm, absn, eh, fad, sol, sw = (v[s] for s in SCHEMA)

    try:
        params = SystemParams(
            frequency=link["frequency_ghz"] * 1e9,
            tx_power=link["tx_power_w"],
            bs_tx=_antenna(ant, "bs_tx"),
            user_rx=_antenna(ant, "user_rx"),
            bs_rx=_antenna(ant, "bs_rx") if "bs_rx_diameter_m" in ant or "bs_rx_efficiency" in ant else None,
            distance=link["distance_m"],
            total_time=link["total_time_T"],
            noise_power=link["noise_power"],
            l0=link["l0_m"],
            alpha=link["alpha_per_s"],
            atmosphere=_field_error(lambda: Atmosphere(atm["relative_humidity"], atm["temperature_c"],
                                                       atm["pressure_pa"]), "atmosphere"),
            eh_model=_harvester(eh),
            fading=_fading(fad),
            absorption=_absorption(absn, base_dir),
            harvest_split_input=link.get("harvest_split_input", False),
        )
    except KeyError as exc:
        raise ConfigError(f"{source}: missing required key {exc.args[0]!r}", exc.args[0]) from None

    solver = _field_error(lambda: SolverConfig(**{k: sol[k] for k in sol}), "solver")
    sweep = SweepSpec(
        variable=sw.get("variable", "rho0"),
        start=sw.get("from"),
        stop=sw.get("to"),
        steps=sw.get("steps", 200),
        rho0=sw.get("rho0", 0.4),
        rho1=sw.get("rho1", 0.5),
        scale_rx_with_tx=sw.get("scale_rx_with_tx", False),
    )
    lo, hi = sweep.bounds(params)
    if sweep.steps > 1 and not lo < hi:
        raise ConfigError(f"{source}: sweep range is empty (from={lo:g}, to={hi:g})", "sweep.from")
    return ScenarioConfig(params, solver, sweep, data.get("output_path"), preset, source, data)


def _field_error(make, name):
    try:
        return make()
    except (DomainError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{name}: {exc}", name) from None


def _antenna(ant: dict, prefix: str) -> AntennaSpec:
    if prefix == "bs_rx":
        d = ant.get("bs_rx_diameter_m", ant["bs_tx_diameter_m"])
        e = ant.get("bs_rx_efficiency", ant["bs_tx_efficiency"])
    else:
        d, e = ant[f"{prefix}_diameter_m"], ant[f"{prefix}_efficiency"]
    return AntennaSpec(d, e)


def _harvester(eh: dict):
    if eh.get("model", "nonlinear") == "linear":
        if "eta" not in eh:
            raise ConfigError("harvester.eta is required for the linear model", "harvester.eta")
        return LinearHarvester(eh["eta"])
    return _field_error(lambda: NonlinearHarvester(eh["a0"], eh["b0"], eh["c0"]), "harvester")


def _fading(fad: dict) -> FadingModel:
    K = fad.get("rician_K", 1.0)
    if fad.get("mode", "mean") == "mc":
        return FadingModel.monte_carlo(K, fad.get("samples", 1000), fad.get("seed", 0))
    return FadingModel.deterministic(K)


def _absorption(absn: dict, base_dir: Path | None):
    if absn.get("provider", "line") == "line":
        return LineModel()
    if "table_csv" not in absn:
        raise ConfigError("absorption.table_csv is required for provider 'table'", "absorption.table_csv")
    path = Path(absn["table_csv"])
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    try:
        return TableProvider.from_csv(path)
    except OSError as exc:
        raise ConfigError(f"absorption.table_csv: {exc.strerror}: {path}", "absorption.table_csv") from None
    except DomainError as exc:
        raise ConfigError(f"absorption.table_csv: {exc}", "absorption.table_csv") from None


def with_overrides(cfg: ScenarioConfig, *, seed: int | None = None, fading: str | None = None,
                   eh: str | None = None) -> ScenarioConfig:
    """Apply command-line overrides on top of a loaded config."""
    params = cfg.params
    if fading is not None or seed is not None:
        f = params.fading
        mode = fading or ("mc" if f.is_monte_carlo else "mean")
        if mode == "mc":
            params = params.with_(fading=FadingModel.monte_carlo(
                f.rician_K, f.sample_count or cfg.raw.get("fading", {}).get("samples", 1000),
                f.seed if seed is None else seed))
        else:
            params = params.with_(fading=FadingModel.deterministic(f.rician_K))
    if eh == "linear":
        eta = cfg.raw.get("harvester", {}).get("eta")
        if eta is None:
            raise ConfigError("--eh linear needs harvester.eta in the config", "harvester.eta")
        params = params.with_(eh_model=_field_error(lambda: LinearHarvester(eta), "harvester.eta"))
    elif eh == "nonlinear":
        h = cfg.raw.get("harvester", {})
        params = params.with_(eh_model=_field_error(
            lambda: NonlinearHarvester(h.get("a0", 0.3929), h.get("b0", 0.01675), h.get("c0", 0.04401)),
            "harvester"))
    return replace(cfg, params=params)
