"""Feedback synthesis and closed-loop simulation.

The feedback law at a state x is the argmin of the one-step semi-Lagrangian
update against a converged value field. Simulation integrates the closed
loop with explicit Euler, refreshing the control every step, so the control
signal is piecewise constant on uniform time intervals. Discounted control
cost is accumulated with the exact per-interval weight

    (exp(-lam t_i) - exp(-lam t_{i+1})) / lam

which makes constant-control cost accumulation exact to roundoff; the state
cost is integrated by the midpoint rule with the discount evaluated at the
interval midpoint. Explicit Euler is deliberate: it matches the solver's
internal one-step prediction, so simulated costs are consistent with the
discrete value function rather than with a higher-order time integration.

Everything here is pure given an immutable ValueField; simulating several
trajectories concurrently is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import ValueField, interpolate, write_csv
from .problem import ControlProblem, eval_dynamics, lp_norm_p
from .solver import SemiLagrangianOperator, SolverConfig, max_speed

__all__ = [
    "Trajectory",
    "DivergenceError",
    "feedback",
    "simulate",
    "simulated_cost_vs_value",
    "write_trajectory_csv",
]


class DivergenceError(RuntimeError):
    """A simulated state left a ball of 10x the domain diameter."""


@dataclass
class Trajectory:
    """A sampled closed-loop path.

    Attributes:
        times: (n+1,) strictly increasing from 0.
        states: (n+1, d) states at the time nodes.
        controls: (n, m) control held on [t_i, t_{i+1}).
        accumulated_cost: (n+1,) discounted running cost over [0, t_i];
            nondecreasing since the running cost is nonnegative.
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    accumulated_cost: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.controls = np.atleast_2d(np.asarray(self.controls, dtype=float))
        self.accumulated_cost = np.asarray(self.accumulated_cost, dtype=float)
        n1 = self.times.size
        if self.states.shape[0] != n1 or self.accumulated_cost.size != n1:
            raise ValueError("states and accumulated_cost must match times")
        if self.controls.shape[0] != n1 - 1:
            raise ValueError("controls must be one shorter than states")
        if n1 > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def total_cost(self) -> float:
        return float(self.accumulated_cost[-1])

    def control_at(self, t: float) -> np.ndarray:
        """Control active at time t (right-continuous, last interval closed)."""
        i = int(np.searchsorted(self.times, t, side="right") - 1)
        i = min(max(i, 0), self.controls.shape[0] - 1)
        return self.controls[i]


def feedback(
    v: ValueField,
    x,
    problem: ControlProblem,
    scfg: SolverConfig,
    op: SemiLagrangianOperator | None = None,
) -> np.ndarray:
    """Feedback control at x: the one-step Bellman argmin against v.

    Uses the same candidate set, injected closed-form candidate, and
    tie-breaking as the solver, so at a grid node this reproduces the
    argmin recorded by the final solver sweep exactly. Pass a prebuilt
    operator to amortize setup over many queries.
    """
    if op is None:
        op = SemiLagrangianOperator(problem, scfg, v.spec)
    return op.point(v, x)[1]


def _default_dt_sim(v: ValueField, problem: ControlProblem) -> float:
    speed = max_speed(problem, v.spec)
    mesh = float(np.min(v.spec.mesh))
    if speed <= 0.0:
        return mesh
    return mesh / (2.0 * speed)


def simulate(
    v: ValueField,
    x0,
    problem: ControlProblem,
    scfg: SolverConfig,
    horizon: float,
    dt_sim: float | None = None,
) -> Trajectory:
    """Integrates the closed loop from x0 over [0, horizon].

    Explicit Euler with the control refreshed each step. States are clamped
    into the domain box only for value lookups; the integrated state is not
    clamped. The final step is shortened when the horizon is not a multiple
    of dt_sim.

    Raises:
        DivergenceError: if the state norm exceeds 10x the domain diameter.
    """
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if dt_sim is None:
        dt_sim = _default_dt_sim(v, problem)
    if not dt_sim > 0:
        raise ValueError("dt_sim must be > 0")

    op = SemiLagrangianOperator(problem, scfg, v.spec)
    cost = problem.cost
    lam = problem.cfg.lam
    escape = 10.0 * v.spec.diameter

    y = np.asarray(x0, dtype=float).copy()
    if y.shape != (v.spec.d,):
        raise ValueError(f"x0 must have shape ({v.spec.d},)")

    times = [0.0]
    states = [y.copy()]
    controls = []
    acc = [0.0]
    t = 0.0
    while t < horizon - 1e-12:
        h = min(dt_sim, horizon - t)
        t_next = t + h
        u = op.point(v, y)[1]
        y_next = y + h * eval_dynamics(problem.dynamics, y, u)
        if float(np.linalg.norm(y_next)) > escape:
            raise DivergenceError(
                f"state norm {np.linalg.norm(y_next):.3g} exceeds 10x the "
                f"domain diameter at t = {t_next:.6g}"
            )
        weight = (math.exp(-lam * t) - math.exp(-lam * t_next)) / lam
        mid = 0.5 * (y + y_next)
        step_cost = weight * cost.gamma * lp_norm_p(u, cost.p)
        step_cost += h * math.exp(-lam * 0.5 * (t + t_next)) * float(cost.ell1(mid))
        times.append(t_next)
        states.append(y_next.copy())
        controls.append(np.asarray(u, dtype=float))
        acc.append(acc[-1] + step_cost)
        y = y_next
        t = t_next

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        controls=np.asarray(controls),
        accumulated_cost=np.asarray(acc),
    )


def simulated_cost_vs_value(
    v: ValueField,
    x0,
    problem: ControlProblem,
    scfg: SolverConfig,
    dt_sim: float | None = None,
    tol_budget: float = 5e-2,
):
    """Closed-loop cost against the value field at x0.

    Picks the horizon T so that exp(-lam T) * max|v| < 0.01 * tol_budget,
    simulates, and adds the tail correction exp(-lam T) * v(y(T)), which
    removes horizon-truncation bias at the value-function level.

    Returns:
        (corrected simulated cost, interpolated v(x0), absolute gap).
    """
    lam = problem.cfg.lam
    vmax = float(np.max(np.abs(v.values)))
    target = 0.01 * tol_budget
    horizon = 1.0
    if vmax > target:
        horizon = max(1.0, math.log(vmax / target) / lam)
    traj = simulate(v, x0, problem, scfg, horizon, dt_sim)
    tail = math.exp(-lam * traj.horizon) * interpolate(v, traj.final_state)
    corrected = traj.total_cost + tail
    v0 = interpolate(v, np.asarray(x0, dtype=float))
    return corrected, v0, abs(corrected - v0)


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """Writes `t,x1..xd,u1..um,cost` rows, one per time node.

    The control column of the last row repeats the final held control so
    every row has the full width.
    """
    n1 = traj.times.size
    m = traj.controls.shape[1]
    d = traj.states.shape[1]
    ctrl = np.vstack([traj.controls, traj.controls[-1:]])
    rows = np.column_stack(
        [traj.times, traj.states, ctrl, traj.accumulated_cost]
    )
    header = (
        ["t"]
        + [f"x{i + 1}" for i in range(d)]
        + [f"u{i + 1}" for i in range(m)]
        + ["cost"]
    )
    write_csv(path, header, rows)
