"""Constrained maximisation of harvested energy and achievable rate.

Two problems over the allocation box ``rho0 in [0, 1), rho1 in [0, 1]``:

* ``maximize_E_subject_R``: max E s.t. R >= R_eps.
* ``maximize_R_subject_E``: max R s.t. E >= E_eps, for either harvester.

Both follow the same divide-and-conquer scheme. E grows and R shrinks
monotonically in ``rho1``, so for any fixed ``rho0`` the optimal ``rho1``
sits on the constraint boundary. The set of ``rho0`` for which that boundary
lies inside ``[0, 1]`` is an interval around the peak of a unimodal margin
function: golden-section search finds the peak, bisection finds the two
ends, and a one-dimensional scan over the ``rho0`` lattice inside the
interval picks the best boundary point.

:func:`grid_oracle` solves the same problems by brute force over the full
``(rho0, rho1)`` lattice and is used to verify the fast path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .harvest import LinearHarvester, NonlinearHarvester
from .link import LN2, ChannelSnapshot

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# Slack on ">=" constraints, relative to the constraint level.
CONSTRAINT_SLACK = 1e-9


def constraint_slack(level: float) -> float:
    return CONSTRAINT_SLACK * abs(level)


class NoBracketError(ValueError):
    """The function has no sign change on the requested interval."""


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    FELL_BACK_TO_GRID = "fell_back_to_grid"


@dataclass(frozen=True)
class SolverConfig:
    """``rho1_on_grid`` restricts rho1 to the grid_step lattice, as the oracle does;
    by default rho1 sits exactly on the constraint boundary."""

    bisection_tol: float = 1e-6
    grid_step: float = 0.01
    max_iterations: int = 200
    rho1_on_grid: bool = False

    def __post_init__(self):
        if not 0 < self.bisection_tol < self.grid_step < 1:
            raise ValueError("need 0 < bisection_tol < grid_step < 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @property
    def rho0_max(self) -> float:
        """Largest rho0 considered by the interval search (rho0 = 1 is excluded)."""
        return 1.0 - self.bisection_tol


@dataclass(frozen=True)
class FeasibleInterval:
    lo: float = math.nan
    hi: float = math.nan
    peak: float = math.nan
    empty: bool = True

    @classmethod
    def none(cls, peak: float = math.nan) -> "FeasibleInterval":
        return cls(math.nan, math.nan, peak, True)

    def contains(self, rho0: float) -> bool:
        return not self.empty and self.lo <= rho0 <= self.hi


@dataclass(frozen=True)
class OptimizationOutcome:
    objective_value: float
    rho0_star: float
    rho1_star: float
    interval: FeasibleInterval
    evaluations: int
    status: Status
    constraint_value: float = math.nan
    problem: str = ""


@dataclass(frozen=True)
class P1:
    """Maximise E subject to R >= r_eps."""

    r_eps: float

    name = "P1"


@dataclass(frozen=True)
class P2:
    """Maximise R subject to E >= e_eps."""

    e_eps: float

    name = "P2"


@dataclass(frozen=True)
class AssumptionReport:
    g0: float
    g1: float
    h0: float
    h1: float
    details: tuple[str, ...] = field(default=())

    @property
    def holds(self) -> bool:
        return self.g0 > 0 and self.g1 < 0 and self.h0 > 0 and self.h1 < 0


class _Counter:
    """Memoising wrapper that counts distinct evaluations."""

    def __init__(self, fn: Callable[[float], float]):
        self.fn = fn
        self.cache: dict[float, float] = {}

    @property
    def calls(self) -> int:
        return len(self.cache)

    def __call__(self, x: float) -> float:
        if x not in self.cache:
            self.cache[x] = self.fn(x)
        return self.cache[x]


# -- scalar searches ------------------------------------------------------------


def bisect_root(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6,
                max_iterations: int = 200) -> float:
    """Root of ``fn`` on ``[lo, hi]`` by bisection, to bracket width ``tol``.

    Raises :class:`NoBracketError` unless ``fn(lo)`` and ``fn(hi)`` differ in sign.
    An endpoint where ``fn`` is exactly zero is returned directly.
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if not (f_lo < 0) ^ (f_hi < 0):
        raise NoBracketError(f"no sign change on [{lo}, {hi}]: f={f_lo}, {f_hi}")
    for _ in range(max_iterations):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0:
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def golden_section_max(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6,
                       max_iterations: int = 200) -> float:
    """Maximiser of a unimodal ``fn`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iterations):
        if b - a <= tol:
            break
        # ">=" keeps the left point on plateaus, so ties resolve toward smaller rho0
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fn(d)
    # endpoints may beat the interior on monotone functions
    best = max(((fn(a), -a), (fc, -c), (fd, -d), (fn(b), -b)))
    return -best[1]


# -- problem-specific margins and boundaries --------------------------------------


def _deterministic(snap: ChannelSnapshot) -> bool:
    return snap.hf_sq.size == 1


def _rate_ratio(snap: ChannelSnapshot, rho0: float, r_eps: float) -> float:
    """(2^{R_eps/((1-rho0)T)} - 1) / (C1 * misalignment gain); rho1 <= 1 - ratio."""
    if rho0 >= 1.0:
        return math.inf if r_eps > 0 else 0.0
    T = snap.params.total_time
    exponent = r_eps / ((1.0 - rho0) * T) * LN2
    need = math.expm1(exponent) if exponent < 700 else math.inf
    have = float(snap.C1[0] * snap.misalignment_gain(rho0))
    if need == 0:
        return 0.0
    return need / have if have > 0 else math.inf


def _rate_margin(snap: ChannelSnapshot, rho0: float, r_eps: float) -> float:
    # >= 0 exactly when some rho1 in [0, 1] meets R >= r_eps
    if _deterministic(snap):
        return 1.0 - _rate_ratio(snap, rho0, r_eps)
    rate = snap.rate(rho0, 0.0) if rho0 < 1.0 else 0.0
    return (rate - r_eps) / max(r_eps, 1.0)


def _rho1_upper(snap: ChannelSnapshot, rho0: float, r_eps: float, cfg: SolverConfig) -> float:
    """Largest rho1 with R(rho0, rho1) >= r_eps, or -inf if none."""
    if _deterministic(snap):
        ratio = _rate_ratio(snap, rho0, r_eps)
        return 1.0 - ratio if ratio <= 1.0 else -math.inf
    gap = lambda r1: snap.rate(rho0, r1) - r_eps
    if gap(0.0) < -constraint_slack(r_eps):
        return -math.inf
    if gap(1.0) >= 0:
        return 1.0
    return _bisect_inside(gap, cfg, keep_sign_of_lo=True)


def _energy_margin(snap: ChannelSnapshot, rho0: float, e_eps: float) -> float:
    # E(rho0, 1) is the most energy attainable at this rho0, for either harvester input
    if rho0 >= 1.0:
        return -e_eps / snap.params.total_time
    return (snap.energy(rho0, 1.0) - e_eps) / snap.params.total_time


def _rho1_lower(snap: ChannelSnapshot, rho0: float, e_eps: float, cfg: SolverConfig) -> float:
    """Smallest rho1 with E(rho0, rho1) >= e_eps, or +inf if none."""
    if e_eps <= 0:
        return 0.0
    full = snap.energy(rho0, 1.0)
    if full < e_eps - constraint_slack(e_eps) or full <= 0:
        return math.inf
    if not snap.params.harvest_split_input:
        # E is linear in rho1: E(rho0, rho1) = rho1 * E(rho0, 1)
        return min(e_eps / full, 1.0)
    gap = lambda r1: snap.energy(rho0, r1) - e_eps
    return _bisect_inside(gap, cfg, keep_sign_of_lo=False)


def _bisect_inside(gap, cfg: SolverConfig, keep_sign_of_lo: bool) -> float:
    """Bisect a monotone ``gap`` on rho1 in [0, 1], returning the feasible side."""
    lo, hi = 0.0, 1.0
    for _ in range(cfg.max_iterations):
        if hi - lo <= cfg.bisection_tol * 1e-3:
            break
        mid = 0.5 * (lo + hi)
        if (gap(mid) >= 0) == keep_sign_of_lo:
            lo = mid
        else:
            hi = mid
    return lo if keep_sign_of_lo else hi


# -- feasible intervals --------------------------------------------------------------


def _interval_from_margin(margin: Callable[[float], float], cfg: SolverConfig) -> FeasibleInterval:
    if not isinstance(margin, _Counter):
        margin = _Counter(margin)
    top = cfg.rho0_max
    peak = golden_section_max(margin, 0.0, top, cfg.bisection_tol, cfg.max_iterations)
    if margin(peak) < 0:
        return FeasibleInterval.none(peak)
    lo = 0.0 if margin(0.0) >= 0 else bisect_root(margin, 0.0, peak, cfg.bisection_tol, cfg.max_iterations)
    hi = top if margin(top) >= 0 else bisect_root(margin, peak, top, cfg.bisection_tol, cfg.max_iterations)
    return FeasibleInterval(lo, hi, peak, False)


def feasible_interval_P1(snap: ChannelSnapshot, r_eps: float, cfg: SolverConfig = SolverConfig()) -> FeasibleInterval:
    """rho0 interval on which R >= r_eps is attainable for some rho1 in [0, 1].

    ``peak`` is the rho0 at which the admissible upper bound on rho1 is largest.
    """
    if r_eps < 0:
        raise ValueError("r_eps must be non-negative")
    return _interval_from_margin(lambda r0: _rate_margin(snap, r0, r_eps), cfg)


def feasible_interval_P2(snap: ChannelSnapshot, e_eps: float, model=None,
                         cfg: SolverConfig = SolverConfig()) -> FeasibleInterval:
    """rho0 interval on which E >= e_eps is attainable for some rho1 in [0, 1].

    ``model`` overrides the snapshot's harvester (linear or nonlinear).
    """
    if e_eps < 0:
        raise ValueError("e_eps must be non-negative")
    snap = _with_harvester(snap, model)
    return _interval_from_margin(lambda r0: _energy_margin(snap, r0, e_eps), cfg)


def _with_harvester(snap: ChannelSnapshot, model) -> ChannelSnapshot:
    if model is None or model == snap.params.eh_model:
        return snap
    if not isinstance(model, (LinearHarvester, NonlinearHarvester)):
        raise TypeError(f"unsupported harvester {model!r}")
    from dataclasses import replace

    return replace(snap, params=snap.params.with_(eh_model=model))


# -- lattice helpers -------------------------------------------------------------


def _snap_down(margin, r1: float, step: float, slack: float):
    """Largest lattice rho1 <= boundary ``r1`` with margin >= -slack (margin decreasing)."""
    n = _lattice_size(step)
    k = min(math.floor(r1 / step + 1e-9) + 1, n)
    while k >= 0:
        if margin(k * step) >= -slack:
            return k * step
        k -= 1
    return None


def _snap_up(margin, r1: float, step: float, slack: float):
    """Smallest lattice rho1 >= boundary ``r1`` with margin >= -slack (margin increasing)."""
    n = _lattice_size(step)
    k = max(math.ceil(r1 / step - 1e-9) - 1, 0)
    while k <= n:
        if margin(k * step) >= -slack:
            return k * step
        k += 1
    return None


def _lattice_size(step: float) -> int:
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} must divide 1")
    return n


def _rho0_candidates(interval: FeasibleInterval, step: float) -> list[float]:
    n = _lattice_size(step)
    first = max(0, math.ceil(interval.lo / step - 1e-9) - 1)
    last = min(n - 1, math.floor(interval.hi / step + 1e-9) + 1)
    return [k * step for k in range(first, last + 1)]


# -- solvers ------------------------------------------------------------------------


def sanity_check_assumptions(snap: ChannelSnapshot) -> AssumptionReport:
    """Evaluate the sign assumptions behind the unimodality argument.

    ``g`` is the stationarity function of E in rho0 and ``h`` the derivative
    of R in rho0 on the rho1 = 0 slice. The fast solvers rely on
    g(0) > 0 > g(1) and h(0) > 0 > h(1).
    """
    g0, g1 = snap.g(0.0), snap.g(1.0)
    h0, h1 = float(snap.h(0.0, 0.0)), float(snap.h(1.0, 0.0))
    details = []
    if not g0 > 0:
        details.append(f"g(0) = {g0:.6g} <= 0: energy does not rise with sensing time")
    if not g1 < 0:
        details.append(f"g(1) = {g1:.6g} >= 0")
    if not h0 > 0:
        details.append(f"h(0) = {h0:.6g} <= 0: rate does not rise with sensing time")
    if not h1 < 0:
        details.append(f"h(1) = {h1:.6g} >= 0")
    return AssumptionReport(g0, g1, h0, h1, tuple(details))


def maximize_E_subject_R(snap: ChannelSnapshot, r_eps: float,
                         cfg: SolverConfig = SolverConfig()) -> OptimizationOutcome:
    """Maximise harvested energy subject to R >= r_eps."""
    if not sanity_check_assumptions(snap).holds:
        return _fallback(snap, P1(r_eps), cfg)
    margin = _Counter(lambda r0: _rate_margin(snap, r0, r_eps))
    interval = _interval_from_margin(margin, cfg)
    if interval.empty:
        return OptimizationOutcome(math.nan, math.nan, math.nan, interval, margin.calls,
                                   Status.INFEASIBLE, problem="P1")

    evals = margin.calls
    best = None
    for r0 in _rho0_candidates(interval, cfg.grid_step) or [interval.peak]:
        r1 = _rho1_upper(snap, r0, r_eps, cfg)
        evals += 1
        if r1 < 0:
            continue
        r1 = min(r1, 1.0)
        if cfg.rho1_on_grid:
            r1 = _snap_down(lambda x: snap.rate(r0, x) - r_eps, r1, cfg.grid_step, constraint_slack(r_eps))
            if r1 is None:
                continue
        e = snap.energy(r0, r1)
        if best is None or e > best[0]:
            best = (e, r0, r1)
    if best is None:
        r0 = interval.peak
        r1 = min(max(_rho1_upper(snap, r0, r_eps, cfg), 0.0), 1.0)
        best = (snap.energy(r0, r1), r0, r1)
        evals += 1
    e, r0, r1 = best
    return OptimizationOutcome(e, r0, r1, interval, evals, Status.OPTIMAL,
                               constraint_value=snap.rate(r0, r1), problem="P1")


def maximize_R_subject_E(snap: ChannelSnapshot, e_eps: float,
                         cfg: SolverConfig = SolverConfig()) -> OptimizationOutcome:
    """Maximise achievable rate subject to E >= e_eps (harvester from the snapshot)."""
    if not sanity_check_assumptions(snap).holds:
        return _fallback(snap, P2(e_eps), cfg)
    margin = _Counter(lambda r0: _energy_margin(snap, r0, e_eps))
    interval = _interval_from_margin(margin, cfg)
    if interval.empty:
        return OptimizationOutcome(math.nan, math.nan, math.nan, interval, margin.calls,
                                   Status.INFEASIBLE, problem="P2")

    evals = margin.calls
    best = None
    for r0 in _rho0_candidates(interval, cfg.grid_step) or [interval.peak]:
        r1 = _rho1_lower(snap, r0, e_eps, cfg)
        evals += 1
        if r1 > 1.0:
            continue
        if cfg.rho1_on_grid:
            r1 = _snap_up(lambda x: snap.energy(r0, x) - e_eps, r1, cfg.grid_step, constraint_slack(e_eps))
            if r1 is None:
                continue
        r = snap.rate(r0, r1)
        if best is None or r > best[0]:
            best = (r, r0, r1)
    if best is None:
        r0 = interval.peak
        r1 = min(_rho1_lower(snap, r0, e_eps, cfg), 1.0)
        best = (snap.rate(r0, r1), r0, r1)
        evals += 1
    r, r0, r1 = best
    return OptimizationOutcome(r, r0, r1, interval, evals, Status.OPTIMAL,
                               constraint_value=snap.energy(r0, r1), problem="P2")


def _fallback(snap: ChannelSnapshot, problem, cfg: SolverConfig) -> OptimizationOutcome:
    out = grid_oracle(snap, problem, cfg.grid_step)
    if out.status is Status.INFEASIBLE:
        return out
    return OptimizationOutcome(out.objective_value, out.rho0_star, out.rho1_star, out.interval,
                               out.evaluations, Status.FELL_BACK_TO_GRID,
                               out.constraint_value, out.problem)


# -- brute-force oracle ---------------------------------------------------------------


def grid_search(objective, constraint, step: float, problem: str = "",
                slack: float = 0.0) -> OptimizationOutcome:
    """Exhaustive search over rho0 in [0, 1-step] x rho1 in [0, 1].

    ``objective`` and ``constraint`` take broadcast ``(rho0, rho1)`` arrays;
    ``constraint`` returns the margin, feasible where ``>= -slack``.
    Ties go to the smallest rho0, then the smallest rho1.
    """
    n = _lattice_size(step)
    r0 = (np.arange(n) * step)[:, None]
    r1 = (np.arange(n + 1) * step)[None, :]
    r0, r1 = np.broadcast_arrays(r0, r1)
    obj = np.asarray(objective(r0, r1), dtype=float)
    margin = np.asarray(constraint(r0, r1), dtype=float)
    feasible = margin >= -slack
    evaluations = obj.size
    if not feasible.any():
        return OptimizationOutcome(math.nan, math.nan, math.nan, FeasibleInterval.none(),
                                   evaluations, Status.INFEASIBLE, problem=problem)
    masked = np.where(feasible, obj, -np.inf)
    i, j = np.unravel_index(np.argmax(masked), masked.shape)
    rows = np.flatnonzero(feasible.any(axis=1))
    interval = FeasibleInterval(float(r0[rows[0], 0]), float(r0[rows[-1], 0]), float(r0[i, 0]), False)
    return OptimizationOutcome(float(obj[i, j]), float(r0[i, j]), float(r1[i, j]), interval,
                               evaluations, Status.OPTIMAL, float(margin[i, j]), problem)


def grid_oracle(snap: ChannelSnapshot, problem, step: float = 0.01) -> OptimizationOutcome:
    """Brute-force reference solution for :class:`P1` or :class:`P2`.

    The returned ``constraint_value`` is the constrained quantity (R for P1,
    E for P2) at the optimum.
    """
    if isinstance(problem, P1):
        shift = problem.r_eps
        out = grid_search(snap.energy, lambda a, b: snap.rate(a, b) - shift, step, "P1",
                          constraint_slack(shift))
    elif isinstance(problem, P2):
        shift = problem.e_eps
        out = grid_search(snap.rate, lambda a, b: snap.energy(a, b) - shift, step, "P2",
                          constraint_slack(shift))
    else:
        raise TypeError(f"unknown problem {problem!r}")
    if out.status is Status.INFEASIBLE:
        return out
    return OptimizationOutcome(out.objective_value, out.rho0_star, out.rho1_star, out.interval,
                               out.evaluations, out.status, out.constraint_value + shift, out.problem)
