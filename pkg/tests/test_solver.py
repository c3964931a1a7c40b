import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_hjb import kernels
from sparse_hjb.eikonal import oracle_value, plan
from sparse_hjb.grid import (
    ValueField,
    grid_points,
    node_coords,
    square_grid,
    zero_field,
)
from sparse_hjb.maximizer import maximize_closed_form
from sparse_hjb.problem import ProblemConfig, make_problem
from sparse_hjb.solver import (
    SemiLagrangianOperator,
    SolveReport,
    SolverConfig,
    max_speed,
    residual_rate,
    sl_update,
    solve,
)


def eikonal_problem(p=1.0, lam=0.2, gamma=1.0, d=2):
    cfg = ProblemConfig(lam=lam, gamma=gamma, p=p, q=2.0, rho=1.0, m=d, d=d)
    return make_problem(cfg)


def test_config_validation():
    SolverConfig(dt=0.025)
    for bad in [
        dict(dt=0.0),
        dict(dt=0.025, tol=0.0),
        dict(dt=0.025, max_iters=0),
        dict(dt=0.025, sweep="sor"),
        dict(dt=0.025, control_density=0),
    ]:
        with pytest.raises(ValueError):
            SolverConfig(**bad)


def test_zero_cost_is_a_one_iteration_fixed_point():
    problem = eikonal_problem()
    problem = make_problem(problem.cfg, ell1=lambda x: 0.0)
    spec = square_grid(1.0, 0.25, d=2)
    field, report = solve(zero_field(spec), problem, SolverConfig(dt=0.25))
    assert report.converged
    assert report.iterations == 1
    assert np.array_equal(field.values, np.zeros(spec.n_nodes))


def test_constant_cost_fixed_point_value():
    # stage cost dt at every node: the fixed point is the geometric sum
    # dt / (1 - e^{-lam dt}), about 5.012510 for dt = 0.025, lam = 0.2
    cfg = ProblemConfig(lam=0.2, gamma=0.0, p=1.0, q=2.0, rho=1.0, m=2, d=2)
    problem = make_problem(cfg, ell1=lambda x: 1.0)
    spec = square_grid(1.0, 0.1, d=2)
    scfg = SolverConfig(dt=0.025, tol=1e-10, control_density=4)
    field, report = solve(zero_field(spec), problem, scfg)
    expect = 0.025 / (1.0 - math.exp(-0.2 * 0.025))
    assert expect == pytest.approx(5.012510, abs=5e-7)
    assert report.converged
    # a residual r at contraction beta leaves a true error up to
    # r * beta / (1 - beta), about 2e-8 here
    assert np.max(np.abs(field.values - expect)) <= 1e-7


def test_staying_put_is_optimal_inside_the_zero_control_box():
    # exact value field sampled from the closed-form oracle; at x = (0.1, 0)
    # every coordinate is below lam * gamma = 0.2, so the argmin is u = 0
    problem = eikonal_problem()
    spec = square_grid(1.0, 0.05, d=2)
    vals = np.array(
        [
            oracle_value(plan(x, 0.2, 1.0, 1.0), x, 0.2, 1.0)
            for x in grid_points(spec)
        ]
    )
    field = ValueField(spec=spec, values=vals)
    value, control = sl_update(
        field, np.array([0.1, 0.0]), problem, SolverConfig(dt=0.025)
    )
    assert np.array_equal(control, np.zeros(2))
    assert value == pytest.approx(0.025, abs=2e-3)  # ||x||^2 / (2 lam)


def test_residual_rate_synthetic():
    hist = 0.9 ** np.arange(1, 40)
    rep = SolveReport(
        iterations=39, final_residual=hist[-1], residual_history=hist, converged=True
    )
    assert residual_rate(rep) == pytest.approx(0.9, abs=1e-12)


def test_residual_rate_diverging_reports_above_one():
    hist = 1.3 ** np.arange(1, 20)
    rep = SolveReport(
        iterations=19, final_residual=hist[-1], residual_history=hist, converged=False
    )
    assert residual_rate(rep) > 1.0


def test_residual_rate_needs_history():
    rep = SolveReport(
        iterations=3,
        final_residual=0.1,
        residual_history=np.array([1.0, 0.5, 0.1]),
        converged=False,
    )
    with pytest.raises(ValueError):
        residual_rate(rep)


def test_cfl_guard():
    problem = eikonal_problem()
    spec = square_grid(1.0, 0.25, d=2)
    with pytest.raises(ValueError):
        solve(zero_field(spec), problem, SolverConfig(dt=5.0))


def test_nan_in_stage_cost_aborts():
    cfg = ProblemConfig(lam=0.2, gamma=1.0, p=1.0, q=2.0, rho=1.0, m=2, d=2)

    def bad_ell1(x):
        return math.nan if x[0] > 0.9 else 0.5 * float(x @ x)

    problem = make_problem(cfg, ell1=bad_ell1)
    spec = square_grid(1.0, 0.25, d=2)
    with pytest.raises(FloatingPointError):
        solve(zero_field(spec), problem, SolverConfig(dt=0.25))


def test_max_speed_eikonal_is_rho():
    problem = eikonal_problem()
    assert max_speed(problem, square_grid(1.0, 0.25, d=2)) == pytest.approx(1.0)


def _operator_apply(op, values, inject):
    extra = None
    if inject:
        extra, _ = op.grid_extra(values)
    out = np.empty_like(values)
    args = np.zeros(values.size, dtype=np.int32)
    kernels.sweep_jacobi(values, op.stage, op.idx, op.w, op.beta, extra, out, args, 1)
    return out


@pytest.fixture(scope="module")
def small_op():
    problem = eikonal_problem()
    spec = square_grid(1.0, 0.25, d=2)
    op = SemiLagrangianOperator(problem, SolverConfig(dt=0.2, control_density=8), spec)
    op.ensure_grid()
    return op


@given(seed=st.integers(0, 2**20))
@settings(max_examples=40, deadline=None)
def test_contraction_property(small_op, seed):
    rng = np.random.default_rng(seed)
    n = small_op.spec.n_nodes
    v = rng.normal(size=n)
    w = rng.normal(size=n)
    tv = _operator_apply(small_op, v, inject=False)
    tw = _operator_apply(small_op, w, inject=False)
    lhs = np.max(np.abs(tv - tw))
    assert lhs <= small_op.beta * np.max(np.abs(v - w)) + 1e-10


@given(seed=st.integers(0, 2**20))
@settings(max_examples=40, deadline=None)
def test_monotonicity_property(small_op, seed):
    rng = np.random.default_rng(seed)
    n = small_op.spec.n_nodes
    v = rng.normal(size=n)
    w = v + np.abs(rng.normal(size=n))  # w >= v nodewise
    tv = _operator_apply(small_op, v, inject=False)
    tw = _operator_apply(small_op, w, inject=False)
    assert np.all(tv <= tw + 1e-12)


def test_contraction_holds_empirically_with_injected_candidates(small_op):
    # the injected candidate set depends on the iterate, so the classical
    # contraction argument does not cover it; check it empirically
    rng = np.random.default_rng(0)
    n = small_op.spec.n_nodes
    for _ in range(20):
        v = rng.normal(size=n)
        w = rng.normal(size=n)
        lhs = np.max(
            np.abs(
                _operator_apply(small_op, v, inject=True)
                - _operator_apply(small_op, w, inject=True)
            )
        )
        assert lhs <= small_op.beta * np.max(np.abs(v - w)) + 1e-10


def test_iterates_stay_nonnegative(coarse_run):
    result, _ = coarse_run
    assert np.min(result.field.values) >= 0.0


def test_gauss_seidel_reaches_the_jacobi_fixed_point():
    problem = eikonal_problem()
    spec = square_grid(1.0, 0.1, d=2)
    base = dict(dt=0.1, tol=1e-9, control_density=8)
    fj, rj = solve(zero_field(spec), problem, SolverConfig(**base))
    fg, rg = solve(zero_field(spec), problem, SolverConfig(sweep="gauss_seidel", **base))
    assert rj.converged and rg.converged
    assert np.max(np.abs(fj.values - fg.values)) <= 1e-6


def test_report_contract(coarse_run):
    result, _ = coarse_run
    rep = result.report
    assert rep.converged
    assert rep.final_residual <= 1e-8
    assert rep.iterations == len(rep.residual_history)
    assert rep.backend in ("compiled", "python")
    assert rep.argmin_controls.shape == (result.field.spec.n_nodes, 2)


def test_pinned_nodes_hold():
    problem = make_problem(
        ProblemConfig(lam=0.2, gamma=0.0, p=1.0, q=2.0, rho=1.0, m=2, d=2),
        ell1=lambda x: 1.0,
    )
    spec = square_grid(1.0, 0.25, d=2)
    pin = (np.array([0, 5]), np.array([0.0, 0.25]))
    for sweep in ("jacobi", "gauss_seidel"):
        scfg = SolverConfig(dt=0.25, sweep=sweep, control_density=4, pinned_nodes=pin)
        field, report = solve(zero_field(spec), problem, scfg)
        assert field.values[0] == 0.0
        assert field.values[5] == 0.25
        assert np.all(report.argmin_controls[[0, 5]] == 0.0)


def test_argmin_matches_pointwise_maximizer_pattern(t1p1_run):
    # compare the final sweep's active sets against the closed-form
    # maximizer driven by the discrete gradient, away from the boundary
    result, _ = t1p1_run
    spec = result.field.spec
    problem = result.preset.problem
    op = SemiLagrangianOperator(problem, result.preset.scfg, spec)
    DV = op._gradient(result.field.values)
    C = -DV / problem.cfg.gamma  # channel matrix is the identity here
    shape = tuple(spec.n_per_dim)
    interior = np.zeros(shape, dtype=bool)
    interior[2:-2, 2:-2] = True
    interior = interior.ravel()
    agree = 0
    total = 0
    for n in np.flatnonzero(interior):
        u_star = maximize_closed_form(C[n], problem.cfg).u_star
        total += 1
        if np.array_equal(u_star != 0.0, result.controls[n] != 0.0):
            agree += 1
    assert agree / total >= 0.90
