"""Exact solutions of the fully actuated problem with L1 control cost.

For dynamics y' = u, constraint ||u||_2 <= rho, and running cost
||x||^2 / 2 + gamma ||u||_1, the optimal control admits a closed form: every
coordinate with |x_i| <= lam * gamma never moves, and the remaining
coordinates shrink radially toward the origin in a cascade of constant-speed
phases, each phase ending when the smallest still-moving coordinate reaches
the box half-width lam * gamma. With the active coordinates relabeled so
0 < a_1 <= ... <= a_n (a_k = |x_k|, a_0 = lam * gamma), phase k has

    radius       r_k  = (a_0 / a_{k-1}) * sqrt(a_k^2 + ... + a_n^2)
    duration     tau_k = (r_k / rho) * (1 - a_{k-1} / a_k)
    control      u_i  = -rho * y_i(t_{k-1}) / r_k   on the moving block,

where r_k equals the Euclidean norm of the still-moving block at the phase
start, so every nonzero phase control has norm exactly rho. These plans are
the ground truth the grid solver and simulator are tested against.

All functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feedback import Trajectory

__all__ = ["EikonalPlan", "plan", "oracle_trajectory", "oracle_value"]


@dataclass
class EikonalPlan:
    """The closed-form optimal solution from one initial state.

    Attributes:
        x0: initial state.
        lam, gamma, rho: problem parameters (rho > 0, lam * gamma >= 0).
        sorted_perm: indices of the active coordinates (|x_i| > lam * gamma)
            in ascending |x_i| order; ties keep original index order.
        switch_times: 0 = t_0 < t_1 < ... < t_K, strictly increasing.
        radii: r_k per phase, the norm of the moving block at phase start.
        phases: (K, d) constant control vectors, one row per phase.
        phase_states: (K + 1, d) exact states at the switch times.
        final_state: where the trajectory rests for t >= t_K; equals x_i in
            inactive coordinates and sgn(x_i) * lam * gamma in active ones.
    """

    x0: np.ndarray
    lam: float
    gamma: float
    rho: float
    sorted_perm: np.ndarray
    switch_times: np.ndarray
    radii: np.ndarray
    phases: np.ndarray
    phase_states: np.ndarray
    final_state: np.ndarray

    @property
    def support_end(self) -> float:
        """End of the control's support (finite for every x0)."""
        return float(self.switch_times[-1])

    def state_at(self, t: float) -> np.ndarray:
        """Exact optimal state at time t >= 0 (piecewise linear)."""
        ts = self.switch_times
        if t >= ts[-1]:
            return self.final_state.copy()
        k = int(np.searchsorted(ts, t, side="right") - 1)
        return self.phase_states[k] + (t - ts[k]) * self.phases[k]

    def control_at(self, t: float) -> np.ndarray:
        """Exact optimal control at time t (right continuous)."""
        ts = self.switch_times
        if t >= ts[-1] or t < 0.0:
            return np.zeros_like(self.final_state)
        k = int(np.searchsorted(ts, t, side="right") - 1)
        return self.phases[k].copy()


def plan(x0, lam: float, gamma: float, rho: float) -> EikonalPlan:
    """Builds the closed-form optimal plan from x0.

    Coordinates with |x_i| <= lam * gamma (non-strict) are inactive and
    never move. With lam * gamma = 0 every phase duration collapses into a
    single radial phase straight to the origin. Zero-duration phases caused
    by ties in |x_i| are dropped, so switch times are strictly increasing.
    """
    x0 = np.asarray(x0, dtype=float).copy()
    if x0.ndim != 1:
        raise ValueError("x0 must be a vector")
    if not rho > 0:
        raise ValueError("rho must be > 0")
    s = lam * gamma
    if s < 0:
        raise ValueError("lam * gamma must be >= 0")
    d = x0.size

    active = np.flatnonzero(np.abs(x0) > s)
    final = x0.copy()
    final[active] = np.sign(x0[active]) * s

    order = active[np.argsort(np.abs(x0[active]), kind="stable")]
    empty = EikonalPlan(
        x0=x0,
        lam=lam,
        gamma=gamma,
        rho=rho,
        sorted_perm=order,
        switch_times=np.array([0.0]),
        radii=np.zeros(0),
        phases=np.zeros((0, d)),
        phase_states=x0[None, :].copy(),
        final_state=final,
    )
    if active.size == 0:
        return empty

    if s == 0.0:
        # Inactive coordinates are exactly 0 here, so the radial phase
        # moves the whole state straight to the origin.
        r = float(np.linalg.norm(x0))
        if r == 0.0:
            # nonzero coordinates so small their squared norm underflows;
            # no representable motion remains
            return empty
        u = -rho * x0 / r
        tau = r / rho
        return EikonalPlan(
            x0=x0,
            lam=lam,
            gamma=gamma,
            rho=rho,
            sorted_perm=order,
            switch_times=np.array([0.0, tau]),
            radii=np.array([r]),
            phases=u[None, :],
            phase_states=np.stack([x0, np.zeros(d)]),
            final_state=np.zeros(d),
        )

    a = np.concatenate([[s], np.abs(x0[order])])
    times = [0.0]
    radii = []
    phases = []
    states = [x0.copy()]
    y = x0.copy()
    for k in range(1, a.size):
        tau = 0.0
        if a[k] > a[k - 1]:
            moving = order[k - 1 :]
            r = float(np.linalg.norm(y[moving]))
            tau = (r / rho) * (1.0 - a[k - 1] / a[k])
            u = np.zeros(d)
            u[moving] = -rho * y[moving] / r
            y = y + tau * u
            radii.append(r)
            phases.append(u)
            times.append(times[-1] + tau)
        # The coordinate that just reached the box rests there exactly.
        y[order[k - 1]] = math.copysign(s, x0[order[k - 1]])
        if tau > 0.0:
            states.append(y.copy())
        else:
            states[-1] = y.copy()

    return EikonalPlan(
        x0=x0,
        lam=lam,
        gamma=gamma,
        rho=rho,
        sorted_perm=order,
        switch_times=np.asarray(times),
        radii=np.asarray(radii),
        phases=np.asarray(phases).reshape(len(phases), d),
        phase_states=np.asarray(states),
        final_state=final,
    )


def _exp_moments(lam: float, t0: float, t1: float):
    """Integrals of e^{-lam s} * s^j over [t0, t1] for j = 0, 1, 2."""
    e0, e1 = math.exp(-lam * t0), math.exp(-lam * t1)
    m0 = (e0 - e1) / lam
    m1 = e0 * (t0 / lam + 1.0 / lam**2) - e1 * (t1 / lam + 1.0 / lam**2)
    m2 = e0 * (t0**2 / lam + 2.0 * t0 / lam**2 + 2.0 / lam**3) - e1 * (
        t1**2 / lam + 2.0 * t1 / lam**2 + 2.0 / lam**3
    )
    return m0, m1, m2


def _segment_cost(lam, gamma, t0, t1, y0, u) -> float:
    """Discounted cost over [t0, t1] with y(s) = y0 + (s - t0) u, u constant.

    The state cost ||y(s)||^2 / 2 is a quadratic in s, so the discounted
    integral is in closed form; the control cost uses the exact interval
    weight (e^{-lam t0} - e^{-lam t1}) / lam.
    """
    w = y0 - t0 * u
    c0 = 0.5 * float(np.dot(w, w))
    c1 = float(np.dot(w, u))
    c2 = 0.5 * float(np.dot(u, u))
    m0, m1, m2 = _exp_moments(lam, t0, t1)
    state = c0 * m0 + c1 * m1 + c2 * m2
    control = gamma * float(np.sum(np.abs(u))) * m0
    return state + control


def _exact_cost_between(pl: EikonalPlan, t0: float, t1: float) -> float:
    """Exact discounted running cost of the plan over [t0, t1]."""
    cuts = [t0]
    for t in pl.switch_times:
        if t0 < t < t1:
            cuts.append(float(t))
    cuts.append(t1)
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        total += _segment_cost(
            pl.lam, pl.gamma, a, b, pl.state_at(a), pl.control_at(a)
        )
    return total


def oracle_trajectory(
    pl: EikonalPlan, x0, dt_sim: float, horizon: float
) -> Trajectory:
    """Samples the exact trajectory and control at uniform time nodes.

    States are evaluated from the piecewise-linear closed form (never
    integrated numerically) and the control column holds the exact control
    on each interval's left endpoint. The accumulated cost column is the
    exact discounted running cost, in closed form per interval.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.allclose(x0, pl.x0, atol=1e-12):
        raise ValueError("x0 does not match the plan's initial state")
    if not dt_sim > 0 or not horizon > 0:
        raise ValueError("dt_sim and horizon must be > 0")

    times = [0.0]
    t = 0.0
    while t < horizon - 1e-12:
        t = min(t + dt_sim, horizon)
        times.append(t)
    times = np.asarray(times)
    states = np.stack([pl.state_at(t) for t in times])
    controls = np.stack([pl.control_at(t) for t in times[:-1]])
    acc = np.zeros(times.size)
    for i in range(times.size - 1):
        acc[i + 1] = acc[i] + _exact_cost_between(pl, times[i], times[i + 1])
    return Trajectory(
        times=times, states=states, controls=controls, accumulated_cost=acc
    )


def oracle_value(
    pl: EikonalPlan, x0, lam: float, gamma: float, quadrature_n: int = 200
) -> float:
    """Discounted total cost of the exact plan, integrated to infinity.

    Control cost is summed in closed form per phase via the exact interval
    weights; state cost on each phase uses composite Simpson quadrature with
    quadrature_n subintervals; the tail beyond the last switch is the exact
    geometric integral e^{-lam t_K} * ||final_state||^2 / (2 lam).
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.allclose(x0, pl.x0, atol=1e-12):
        raise ValueError("x0 does not match the plan's initial state")
    if quadrature_n < 100:
        raise ValueError("quadrature_n must be >= 100")
    if not math.isclose(lam, pl.lam) or not math.isclose(gamma, pl.gamma):
        raise ValueError("lam and gamma do not match the plan")

    n = quadrature_n + (quadrature_n % 2)
    total = 0.0
    for k in range(pl.phases.shape[0]):
        t0, t1 = pl.switch_times[k], pl.switch_times[k + 1]
        u = pl.phases[k]
        m0 = (math.exp(-lam * t0) - math.exp(-lam * t1)) / lam
        total += gamma * float(np.sum(np.abs(u))) * m0
        ts = np.linspace(t0, t1, n + 1)
        ys = pl.phase_states[k][None, :] + (ts - t0)[:, None] * u[None, :]
        g = np.exp(-lam * ts) * 0.5 * np.sum(ys**2, axis=1)
        h = (t1 - t0) / n
        total += h / 3.0 * (g[0] + g[-1] + 4.0 * np.sum(g[1:-1:2]) + 2.0 * np.sum(g[2:-2:2]))
    tail = math.exp(-lam * pl.support_end) * float(
        np.dot(pl.final_state, pl.final_state)
    ) / (2.0 * lam)
    return total + tail
