"""First-order optimality structure checks along simulated trajectories.

Along a state/control path (y, u) the adjoint state solves, backward in
time,

    phi'(s) = -[df/dy(y, u)]^T phi(s) - e^{-lam s} grad_ell1(y(s)),

with phi vanishing at infinity; the integrator truncates that limit
condition to phi(T_trunc) = 0, which the exponential discount justifies.
The switching functions

    c_i(s) = -f_i(y(s)) . phi(s) * e^{lam s} / gamma

(one per control channel f_i) determine the optimal control pointwise: the
closed-form Hamiltonian maximizer evaluated at c(s) must reproduce u(s)
wherever the trajectory is optimal. verify_structure performs exactly that
comparison and summarizes where it holds.

Pure functions; concurrent use is unrestricted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feedback import Trajectory
from .grid import write_csv
from .maximizer import VertexConditionError, maximize_closed_form
from .problem import ControlProblem, ProblemConfig

__all__ = [
    "AdjointTrace",
    "StructureReport",
    "integrate_adjoint",
    "verify_structure",
    "write_adjoint_csv",
]


@dataclass
class AdjointTrace:
    """Adjoint and switching-function samples.

    The first nodes coincide with the source trajectory's times; further
    nodes extend to the truncation horizon where phi = 0 exactly. At every
    stored node c = -F(y)^T phi e^{lam t} / gamma holds by construction.
    """

    times: np.ndarray
    phi: np.ndarray
    c: np.ndarray


@dataclass
class StructureReport:
    """Outcome of the pointwise maximizer comparison.

    Attributes:
        match_fraction: fraction of trajectory nodes where the closed-form
            maximizer at c(t) reproduces the trajectory's control.
        matched: per-node boolean record.
        switchoff_time: start of the trailing interval on which the
            trajectory control is identically zero (the final time if the
            control never shuts off).
        max_c_after_switchoff: max ||c(t)||_inf over nodes at or after
            switchoff_time.
        c_increase_max: largest increase of any |c_i| between consecutive
            nodes; c_nonincreasing applies a 1e-8 slack to it. Monotonicity
            is only expected for the fully actuated L1 problem started from
            coordinates outside the zero-control box.
    """

    match_fraction: float
    matched: np.ndarray
    switchoff_time: float
    max_c_after_switchoff: float
    c_increase_max: float
    c_nonincreasing: bool


def _state_interp(traj: Trajectory):
    """Piecewise-linear state lookup, constant beyond the final node."""
    times = traj.times
    states = traj.states
    t_end = float(times[-1])

    def y_at(s: float) -> np.ndarray:
        if s >= t_end:
            return states[-1]
        if s <= times[0]:
            return states[0]
        j = int(np.searchsorted(times, s, side="right") - 1)
        h = times[j + 1] - times[j]
        w = (s - times[j]) / h
        return (1.0 - w) * states[j] + w * states[j + 1]

    def u_at(s: float) -> np.ndarray:
        if s >= t_end:
            return np.zeros(traj.controls.shape[1])
        j = int(np.searchsorted(times, s, side="right") - 1)
        j = min(max(j, 0), traj.controls.shape[0] - 1)
        return traj.controls[j]

    return y_at, u_at


def integrate_adjoint(
    traj: Trajectory, problem: ControlProblem, T_trunc: float = 60.0
) -> AdjointTrace:
    """Integrates the adjoint backward from phi(T_trunc) = 0.

    Classical RK4 between the trajectory's own time nodes (the adjoint is
    smooth between control switches, and node alignment avoids interpolating
    the control); beyond the trajectory's support the state is held constant
    at its final value with zero control. Returns samples at the trajectory
    nodes followed by the extension nodes up to T_trunc.

    Raises:
        NotImplementedError: if the dynamics Jacobian or grad_ell1 is
            missing (no automatic differentiation is attempted).
        ValueError: if gamma <= 0 or T_trunc precedes the trajectory's end.
    """
    dyn = problem.dynamics
    cost = problem.cost
    if dyn.jac is None:
        raise NotImplementedError("adjoint integration needs an analytic dynamics Jacobian")
    if cost.grad_ell1 is None:
        raise NotImplementedError("adjoint integration needs grad_ell1")
    if not cost.gamma > 0:
        raise ValueError("switching functions need gamma > 0")
    lam = problem.cfg.lam
    t_end = float(traj.times[-1])
    if T_trunc < t_end:
        raise ValueError("T_trunc must not precede the trajectory's end")

    y_at, u_at = _state_interp(traj)

    def rhs(s: float, phi: np.ndarray) -> np.ndarray:
        y = y_at(s)
        J = np.asarray(dyn.jac(y, u_at(s)), dtype=float)
        return -J.T @ phi - math.exp(-lam * s) * np.asarray(
            cost.grad_ell1(y), dtype=float
        )

    h_ref = float(np.median(np.diff(traj.times))) if traj.times.size > 1 else 0.05
    n_ext = 0
    if T_trunc > t_end + 1e-12:
        n_ext = max(1, int(math.ceil((T_trunc - t_end) / h_ref)))
    ext = np.linspace(t_end, T_trunc, n_ext + 1)[1:]
    all_times = np.concatenate([traj.times, ext])

    n = all_times.size
    phi = np.zeros((n, problem.cfg.d))
    for i in range(n - 2, -1, -1):
        t1 = all_times[i + 1]
        h = t1 - all_times[i]
        p1 = phi[i + 1]
        k1 = rhs(t1, p1)
        k2 = rhs(t1 - 0.5 * h, p1 - 0.5 * h * k1)
        k3 = rhs(t1 - 0.5 * h, p1 - 0.5 * h * k2)
        k4 = rhs(t1 - h, p1 - h * k3)
        phi[i] = p1 - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    c = np.empty((n, problem.cfg.m))
    for i in range(n):
        F = dyn.channel_matrix(y_at(all_times[i]))
        c[i] = -(F.T @ phi[i]) * math.exp(lam * all_times[i]) / cost.gamma
    return AdjointTrace(times=all_times, phi=phi, c=c)


def verify_structure(
    traj: Trajectory,
    adj: AdjointTrace,
    cfg: ProblemConfig,
    match_tol: float = 5e-2,
) -> StructureReport:
    """Compares the trajectory's control with the maximizer implied by c(t).

    At every trajectory node the closed-form Hamiltonian maximizer is
    evaluated at the switching vector and compared in the sup norm against
    the control the trajectory actually applied. Never raises; defects show
    up as unmatched nodes in the report.
    """
    n = traj.times.size
    if adj.times.size < n or not np.allclose(adj.times[:n], traj.times, atol=1e-12):
        raise ValueError("adjoint trace does not align with the trajectory nodes")

    matched = np.zeros(n, dtype=bool)
    for i in range(n):
        u_node = traj.controls[min(i, traj.controls.shape[0] - 1)]
        try:
            u_star = maximize_closed_form(adj.c[i], cfg).u_star
        except VertexConditionError:
            continue
        matched[i] = float(np.max(np.abs(u_star - u_node))) <= match_tol

    active = np.flatnonzero(np.max(np.abs(traj.controls), axis=1) > 1e-12)
    if active.size == 0:
        t_off = float(traj.times[0])
    elif active[-1] == traj.controls.shape[0] - 1:
        t_off = float(traj.times[-1])
    else:
        t_off = float(traj.times[active[-1] + 1])

    after = adj.times >= t_off - 1e-12
    max_c_after = float(np.max(np.abs(adj.c[after]))) if np.any(after) else 0.0

    abs_c = np.abs(adj.c)
    c_increase_max = float(np.max(np.diff(abs_c, axis=0))) if adj.times.size > 1 else 0.0
    return StructureReport(
        match_fraction=float(np.mean(matched)),
        matched=matched,
        switchoff_time=t_off,
        max_c_after_switchoff=max_c_after,
        c_increase_max=c_increase_max,
        c_nonincreasing=bool(c_increase_max <= 1e-8),
    )


def write_adjoint_csv(path, adj: AdjointTrace) -> None:
    """Writes `t,phi1..phid,c1..cm` rows, one per stored node."""
    d = adj.phi.shape[1]
    m = adj.c.shape[1]
    header = (
        ["t"]
        + [f"phi{i + 1}" for i in range(d)]
        + [f"c{i + 1}" for i in range(m)]
    )
    rows = np.column_stack([adj.times, adj.phi, adj.c])
    write_csv(path, header, rows)
