import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thz_iscap.harvest import LinearHarvester
from thz_iscap.link import TABLE1, snapshot
from thz_iscap.optimizer import (
    P1,
    P2,
    NoBracketError,
    SolverConfig,
    Status,
    bisect_root,
    feasible_interval_P1,
    feasible_interval_P2,
    golden_section_max,
    grid_oracle,
    grid_search,
    maximize_E_subject_R,
    maximize_R_subject_E,
    sanity_check_assumptions,
)
from thz_iscap.propagation import FadingModel

SNAP = snapshot(TABLE1)
CFG = SolverConfig()


def random_scenarios(n, seed=7):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield TABLE1.with_(
            distance=rng.uniform(5, 100),
            frequency=rng.uniform(100e9, 450e9),
            total_time=rng.uniform(10, 200),
            l0=rng.uniform(0.1, 2),
            alpha=rng.uniform(0.01, 0.5),
        )


def half_max_levels(snap):
    r0 = np.linspace(0, 0.99, 100)
    return 0.5 * float(np.max(snap.rate(r0, 0.0))), 0.5 * float(np.max(snap.energy(r0, 1.0)))


# -- scalar searches -------------------------------------------------------------------


def test_bisect_linear():
    assert bisect_root(lambda x: x - 0.5, 0.0, 1.0, 1e-6) == pytest.approx(0.5, abs=1e-6)


def test_bisect_exact_endpoint():
    assert bisect_root(lambda x: x, 0.0, 1.0) == 0.0


def test_bisect_no_bracket():
    with pytest.raises(NoBracketError):
        bisect_root(lambda x: x + 1.0, 0.0, 1.0)


def test_bisect_finds_root_of_g():
    grid = np.linspace(0, 1, 1001)
    g = SNAP.g(grid)
    assert np.sum(np.diff(np.sign(g)) != 0) == 1
    root = bisect_root(SNAP.g, 0.0, 1.0, 1e-9)
    assert 0 < root < 1
    assert abs(SNAP.g(root)) < 1e-6


@given(st.floats(0.05, 0.95))
def test_golden_section_parabola(c):
    x = golden_section_max(lambda t: -(t - c) ** 2, 0.0, 1.0, 1e-8)
    assert x == pytest.approx(c, abs=1e-6)


def test_golden_section_monotone_returns_endpoint():
    assert golden_section_max(lambda t: t, 0.0, 1.0) == 1.0
    assert golden_section_max(lambda t: -t, 0.0, 1.0) == 0.0


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(bisection_tol=0.1, grid_step=0.01)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)


# -- feasible intervals -----------------------------------------------------------------


def test_interval_vacuous_constraints():
    iv = feasible_interval_P1(SNAP, 0.0)
    assert (iv.lo, iv.hi, iv.empty) == (0.0, CFG.rho0_max, False)
    iv = feasible_interval_P2(SNAP, 0.0)
    assert (iv.lo, iv.hi, iv.empty) == (0.0, CFG.rho0_max, False)


def test_interval_empty_when_unreachable():
    assert feasible_interval_P1(SNAP, 1e9).empty
    assert feasible_interval_P2(SNAP, 1e3).empty


def test_interval_endpoints_are_margin_roots():
    r_eps = 1500.0
    iv = feasible_interval_P1(SNAP, r_eps)
    assert iv.lo <= iv.peak <= iv.hi
    # At the ends only rho1 = 0 meets the floor.
    for edge in (iv.lo, iv.hi):
        assert SNAP.rate(edge, 0.0) == pytest.approx(r_eps, rel=1e-5)


def test_interval_p2_linear_model_argument():
    lin = LinearHarvester(0.5)
    iv = feasible_interval_P2(SNAP, 1.0, model=lin)
    s = snapshot(TABLE1.with_(eh_model=lin))
    for edge in (iv.lo, iv.hi):
        assert s.energy(edge, 1.0) == pytest.approx(1.0, rel=1e-4)
    with pytest.raises(TypeError):
        feasible_interval_P2(SNAP, 1.0, model="linear")


def test_negative_levels_rejected():
    with pytest.raises(ValueError):
        feasible_interval_P1(SNAP, -1.0)
    with pytest.raises(ValueError):
        feasible_interval_P2(SNAP, -1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(100.0, 1600.0), st.floats(1.0, 100.0))
def test_p1_intervals_nested(r_eps, extra):
    outer = feasible_interval_P1(SNAP, r_eps)
    inner = feasible_interval_P1(SNAP, r_eps + extra)
    if not inner.empty:
        assert outer.lo <= inner.lo + 1e-6 and inner.hi <= outer.hi + 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.4), st.floats(0.001, 0.1))
def test_p2_intervals_nested(e_eps, extra):
    outer = feasible_interval_P2(SNAP, e_eps)
    inner = feasible_interval_P2(SNAP, e_eps + extra)
    if not inner.empty:
        assert outer.lo <= inner.lo + 1e-6 and inner.hi <= outer.hi + 1e-6


# -- solvers ------------------------------------------------------------------------


def test_p1_zero_floor_reduces_to_rho1_one():
    out = maximize_E_subject_R(SNAP, 0.0)
    grid = np.arange(100) * 0.01
    assert out.rho1_star == 1.0
    assert out.objective_value == pytest.approx(np.max(SNAP.energy(grid, 1.0)), rel=1e-12)


def test_p2_zero_floor_reduces_to_rho1_zero():
    out = maximize_R_subject_E(SNAP, 0.0)
    grid = np.arange(100) * 0.01
    assert out.rho1_star == 0.0
    assert out.objective_value == pytest.approx(np.max(SNAP.rate(grid, 0.0)), rel=1e-12)


def test_infeasible_status():
    out = maximize_E_subject_R(SNAP, 1e9)
    assert out.status is Status.INFEASIBLE and out.interval.empty
    assert math.isnan(out.objective_value)
    assert maximize_R_subject_E(SNAP, 1e3).status is Status.INFEASIBLE
    assert grid_oracle(SNAP, P1(1e9)).status is Status.INFEASIBLE


def test_p1_table1_vs_oracle():
    out = maximize_E_subject_R(SNAP, 1500.0)
    ref = grid_oracle(SNAP, P1(1500.0))
    assert out.status is Status.OPTIMAL
    assert out.objective_value >= ref.objective_value * (1 - 0.005)
    assert abs(out.rho0_star - ref.rho0_star) <= 0.01 + 1e-9
    assert out.constraint_value == pytest.approx(1500.0, rel=1e-9)


@pytest.mark.parametrize("variant", ["nonlinear", "linear", "split", "mc"])
def test_p2_variants_vs_oracle(variant):
    params = {
        "nonlinear": TABLE1,
        "linear": TABLE1.with_(eh_model=LinearHarvester(0.5)),
        "split": TABLE1.with_(harvest_split_input=True),
        "mc": TABLE1.with_(fading=FadingModel.monte_carlo(1.0, 200, seed=3)),
    }[variant]
    snap = snapshot(params)
    _, e_eps = half_max_levels(snap)
    cfg = SolverConfig(rho1_on_grid=True)
    out = maximize_R_subject_E(snap, e_eps, cfg)
    ref = grid_oracle(snap, P2(e_eps))
    assert out.status is Status.OPTIMAL
    assert (out.rho0_star, out.rho1_star) == pytest.approx((ref.rho0_star, ref.rho1_star), abs=1e-9)
    assert out.objective_value == pytest.approx(ref.objective_value, rel=1e-12)


@pytest.mark.parametrize("variant", ["linear", "split", "mc"])
def test_p1_variants_vs_oracle(variant):
    params = {
        "linear": TABLE1.with_(eh_model=LinearHarvester(0.5)),
        "split": TABLE1.with_(harvest_split_input=True),
        "mc": TABLE1.with_(fading=FadingModel.monte_carlo(1.0, 200, seed=3)),
    }[variant]
    snap = snapshot(params)
    r_eps, _ = half_max_levels(snap)
    out = maximize_E_subject_R(snap, r_eps, SolverConfig(rho1_on_grid=True))
    ref = grid_oracle(snap, P1(r_eps))
    assert (out.rho0_star, out.rho1_star) == pytest.approx((ref.rho0_star, ref.rho1_star), abs=1e-9)


def test_boundary_optimality_randomised():
    for params in random_scenarios(50):
        snap = snapshot(params)
        r_eps, e_eps = half_max_levels(snap)
        out = maximize_E_subject_R(snap, r_eps)
        assert out.status is not Status.INFEASIBLE
        # grid fallbacks sit on the lattice rather than the exact boundary
        if out.status is Status.OPTIMAL and out.rho1_star < 1.0:
            assert snap.rate(out.rho0_star, out.rho1_star) == pytest.approx(r_eps, rel=1e-6)
        out = maximize_R_subject_E(snap, e_eps)
        if out.status is Status.OPTIMAL and out.rho1_star > 0.0:
            assert snap.energy(out.rho0_star, out.rho1_star) == pytest.approx(e_eps, rel=1e-6)


def test_continuous_solver_dominates_oracle():
    for params in random_scenarios(20, seed=11):
        snap = snapshot(params)
        r_eps, e_eps = half_max_levels(snap)
        for out, ref in (
            (maximize_E_subject_R(snap, r_eps), grid_oracle(snap, P1(r_eps))),
            (maximize_R_subject_E(snap, e_eps), grid_oracle(snap, P2(e_eps))),
        ):
            assert out.objective_value >= ref.objective_value * (1 - 1e-12)


def test_evaluation_count_bound():
    out = maximize_E_subject_R(SNAP, 1500.0)
    ref = grid_oracle(SNAP, P1(1500.0))
    iv = out.interval
    # golden section needs ~1.44 log2(1/tol) probes, absorbed by the constant
    bound = 3 * math.log2(1 / CFG.bisection_tol) + (iv.hi - iv.lo) / CFG.grid_step + 25
    assert out.evaluations <= bound
    assert out.evaluations < ref.evaluations


def test_deterministic():
    a = maximize_E_subject_R(SNAP, 1500.0)
    b = maximize_E_subject_R(snapshot(TABLE1), 1500.0)
    assert a == b
    mc = TABLE1.with_(fading=FadingModel.monte_carlo(1.0, 100, seed=9))
    assert maximize_R_subject_E(snapshot(mc), 0.1) == maximize_R_subject_E(snapshot(mc), 0.1)


# -- oracle and fallback -----------------------------------------------------------------


def test_grid_search_toy():
    out = grid_search(lambda a, b: a * b, lambda a, b: np.zeros_like(a), 0.01)
    assert (out.rho0_star, out.rho1_star) == pytest.approx((0.99, 1.0))
    assert out.evaluations == 100 * 101


def test_grid_search_tie_prefers_small_rho0():
    out = grid_search(lambda a, b: np.ones_like(a), lambda a, b: np.zeros_like(a), 0.01)
    assert (out.rho0_star, out.rho1_star) == (0.0, 0.0)


def test_grid_step_must_divide_one():
    with pytest.raises(ValueError):
        grid_search(lambda a, b: a, lambda a, b: a, 0.03)


def test_oracle_optimum_on_boundary_for_p1():
    ref = grid_oracle(SNAP, P1(1500.0))
    # One lattice step up in rho1 violates the rate floor.
    assert SNAP.rate(ref.rho0_star, ref.rho1_star + 0.01) < 1500.0


def test_oracle_unknown_problem():
    with pytest.raises(TypeError):
        grid_oracle(SNAP, "P3")


def test_sanity_report_table1():
    rep = sanity_check_assumptions(SNAP)
    assert rep.g0 > 0 and rep.g1 < 0 and rep.h0 > 0 and rep.h1 < 0
    assert rep.holds and rep.details == ()


def test_fallback_without_sensing_benefit():
    snap = snapshot(TABLE1.with_(alpha=0.0))
    rep = sanity_check_assumptions(snap)
    assert rep.g0 == pytest.approx(-snap.R_ebw**2)
    assert not rep.holds
    out = maximize_E_subject_R(snap, 0.0)
    assert out.status is Status.FELL_BACK_TO_GRID
    assert out.rho0_star == 0.0
    out = maximize_R_subject_E(snap, 0.0)
    assert out.status is Status.FELL_BACK_TO_GRID
