"""Problem data shared by the solver stack.

Holds the scalar problem parameters, the admissible control set (an l^q
ball, or a box for q = infinity), control-affine dynamics of the form
f(x, u) = f0(x) + sum_k fk(x) u_k, and running costs
l(x, u) = ell1(x) + gamma * sum_i |u_i|^p.

Everything here is immutable after construction and every operation is a
pure function, so unrestricted concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "ProblemConfig",
    "ControlSet",
    "Dynamics",
    "RunningCost",
    "ControlSamples",
    "ControlProblem",
    "eval_dynamics",
    "eval_cost",
    "lp_norm_p",
    "sample_control_set",
    "eikonal_dynamics",
    "nonlinear_test2_dynamics",
    "default_ell1",
    "default_ell1_grad",
    "make_problem",
]

# Seed for the rejection-sampling fallback of sample_control_set; fixed so
# sampled sets are reproducible across runs.
_FALLBACK_SEED = 12345


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    """Scalar problem parameters.

    Attributes:
        lam: discount rate (1/time), must be positive.
        gamma: control penalty weight, nonnegative.
        p: penalty exponent, 0 < p <= 2 (p <= 1 gives sparsity effects,
            p = 2 is the classical quadratic baseline).
        q: constraint exponent, q >= 1 or math.inf. Infinity is the box
            constraint and is encoded as the distinct value math.inf,
            never as a large finite float.
        rho: constraint radius. A scalar for q < inf; for q = inf either a
            scalar or a length-m vector of per-coordinate radii.
        m: control dimension.
        d: state dimension.
    """

    lam: float
    gamma: float
    p: float
    q: float
    rho: float | np.ndarray
    m: int
    d: int

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("discount rate lam must be > 0")
        if self.gamma < 0:
            raise ValueError("control weight gamma must be >= 0")
        if not 0 < self.p <= 2:
            raise ValueError("penalty exponent p must be in (0, 2]")
        if not (self.q >= 1 or math.isinf(self.q)):
            raise ValueError("constraint exponent q must be >= 1 or inf")
        if self.m < 1 or self.d < 1:
            raise ValueError("dimensions m, d must be >= 1")
        radii = np.atleast_1d(np.asarray(self.rho, dtype=float))
        if np.any(radii <= 0):
            raise ValueError("constraint radius rho must be > 0")
        if radii.size != 1 and not math.isinf(self.q):
            raise ValueError("per-coordinate radii are only allowed for q = inf")
        if radii.size not in (1, self.m):
            raise ValueError("rho must be a scalar or a length-m vector")

    @property
    def radii(self) -> np.ndarray:
        """Per-coordinate radii as a length-m array."""
        r = np.atleast_1d(np.asarray(self.rho, dtype=float))
        if r.size == 1:
            r = np.full(self.m, float(r[0]))
        return r

    def control_set(self) -> "ControlSet":
        return ControlSet(q=self.q, radii=self.radii)


@dataclass(frozen=True, eq=False)
class ControlSet:
    """An l^q ball (q < inf) or a box (q = inf) in R^m.

    For q < inf all radii are equal and membership means
    sum_i |u_i|^q <= rho^q; for q = inf membership means |u_i| <= radii[i]
    for every coordinate. The set always contains 0 and is symmetric under
    coordinate sign flips.
    """

    q: float
    radii: np.ndarray

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        object.__setattr__(self, "radii", radii)
        if radii.ndim != 1 or radii.size < 1:
            raise ValueError("radii must be a 1d vector")
        if np.any(radii <= 0):
            raise ValueError("radii must be > 0")
        if not math.isinf(self.q):
            if not self.q >= 1:
                raise ValueError("q must be >= 1 or inf")
            if not np.all(radii == radii[0]):
                raise ValueError("per-coordinate radii require q = inf")

    @property
    def m(self) -> int:
        return self.radii.size

    @property
    def rho(self) -> float:
        """Scalar radius (the common radius for q < inf)."""
        return float(self.radii[0])

    def contains(self, u: Sequence[float], tol: float = 1e-12) -> bool:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.m,):
            raise ValueError(f"control must have shape ({self.m},)")
        if math.isinf(self.q):
            return bool(np.all(np.abs(u) <= self.radii + tol))
        return bool(np.sum(np.abs(u) ** self.q) <= self.rho**self.q + tol)


@dataclass(frozen=True, eq=False)
class Dynamics:
    """Control-affine vector field f(x, u) = f0(x) + sum_k fk(x) u_k.

    Attributes:
        kind: one of "eikonal", "nonlinear_test2", "custom".
        f0: drift term, maps a state vector to a state vector.
        fk: control channels, one state-to-state map per control coordinate.
        jac: optional state Jacobian (x, u) -> d x d array of df/dx; required
            by the adjoint integrator. Provided analytically for the built-in
            kinds, must be supplied for custom dynamics that need it.
        lipschitz_hint: optional positive bound used only as a diagnostic.
    """

    kind: str
    f0: Callable[[np.ndarray], np.ndarray]
    fk: tuple
    jac: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    lipschitz_hint: float | None = None

    @property
    def m(self) -> int:
        return len(self.fk)

    def channel_matrix(self, x: np.ndarray) -> np.ndarray:
        """Stacks the control channels into the d x m matrix F(x)."""
        return np.stack([np.asarray(f(x), dtype=float) for f in self.fk], axis=1)


@dataclass(frozen=True, eq=False)
class RunningCost:
    """Running cost l(x, u) = ell1(x) + gamma * sum_i |u_i|^p.

    ell1 must be nonnegative on the computational domain; the default is
    the quadratic x -> ||x||^2 / 2. Strict convexity of a user-supplied
    ell1 is assumed, not verified. grad_ell1 is needed by the adjoint
    integrator only.
    """

    ell1: Callable[[np.ndarray], float]
    gamma: float
    p: float
    grad_ell1: Callable[[np.ndarray], np.ndarray] | None = None


class ControlSamples(NamedTuple):
    """Finite subset of a control set produced by sample_control_set.

    structured is False when the structured patterns did not apply and the
    seeded rejection-sampling fallback was used instead.
    """

    points: np.ndarray
    structured: bool


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Bundle of problem data consumed by the solver and simulator."""

    cfg: ProblemConfig
    dynamics: Dynamics
    cost: RunningCost
    control_set: ControlSet


def default_ell1(x: np.ndarray) -> float:
    """State cost ||x||^2 / 2."""
    x = np.asarray(x, dtype=float)
    return 0.5 * float(np.dot(x, x))


def default_ell1_grad(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float).copy()


def eikonal_dynamics(d: int = 2) -> Dynamics:
    """Fully actuated integrator: f(x, u) = u."""

    def f0(x):
        return np.zeros(d)

    def jac(x, u):
        return np.zeros((d, d))

    basis = np.eye(d)
    fk = tuple((lambda x, e=basis[k]: e) for k in range(d))
    return Dynamics(kind="eikonal", f0=f0, fk=fk, jac=jac, lipschitz_hint=0.0)


def nonlinear_test2_dynamics(q1: float = 0.6, q2: float = 0.4) -> Dynamics:
    """Planar dynamics x1' = x1 (x1 - q1) + u1, x2' = x2 (x2 - q2) + u2."""

    def f0(x):
        return np.array([x[0] * (x[0] - q1), x[1] * (x[1] - q2)])

    def jac(x, u):
        return np.diag([2.0 * x[0] - q1, 2.0 * x[1] - q2])

    basis = np.eye(2)
    fk = tuple((lambda x, e=basis[k]: e) for k in range(2))
    return Dynamics(kind="nonlinear_test2", f0=f0, fk=fk, jac=jac)


def eval_dynamics(dyn: Dynamics, x: Sequence[float], u: Sequence[float]) -> np.ndarray:
    """Evaluates f(x, u) = f0(x) + sum_k fk(x) u_k.

    Raises:
        ValueError: if the control dimension does not match the dynamics.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.shape != (dyn.m,):
        raise ValueError(f"control must have shape ({dyn.m},), got {u.shape}")
    out = np.asarray(dyn.f0(x), dtype=float).copy()
    if out.shape != x.shape:
        raise ValueError("f0 output dimension does not match the state")
    for k, fk in enumerate(dyn.fk):
        if u[k] != 0.0:
            out += u[k] * np.asarray(fk(x), dtype=float)
    return out


def lp_norm_p(u: Sequence[float], p: float) -> float:
    """Returns sum_i |u_i|^p, the p-th power sum used inside the running cost."""
    if not p > 0:
        raise ValueError("exponent p must be > 0")
    u = np.asarray(u, dtype=float)
    return float(np.sum(np.abs(u) ** p))


def eval_cost(cost: RunningCost, x: Sequence[float], u: Sequence[float]) -> float:
    """Evaluates l(x, u) = ell1(x) + gamma * sum_i |u_i|^p."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return float(cost.ell1(x)) + cost.gamma * lp_norm_p(u, cost.p)


def _dedupe_rows(points: np.ndarray) -> np.ndarray:
    # np.unique sorts rows lexicographically, which is fine: callers that
    # care about candidate ordering re-order explicitly.
    return np.unique(points, axis=0)


def _axis_anchors(cs: ControlSet) -> np.ndarray:
    m = cs.m
    anchors = [np.zeros(m)]
    for i in range(m):
        e = np.zeros(m)
        e[i] = cs.radii[i]
        anchors.append(e.copy())
        anchors.append(-e)
    return np.asarray(anchors)


def sample_control_set(cs: ControlSet, density: int) -> ControlSamples:
    """Builds a finite search subset of the control set.

    The result always contains 0 and the signed axis extremes, so sparse
    and bang-bang minimizers are exactly representable. Structured patterns:

    * m = 1: a uniform grid of 2 * density + 1 points on the interval.
    * m = 2, q < inf: `density` equally spaced boundary directions (projected
      onto the l^q sphere) replicated on max(1, density // 4) radial shells.
    * q = inf, m <= 3: a Cartesian grid with density + 1 points per axis,
      which includes the box corners.

    Any other (q, m) combination falls back to rejection sampling on the
    bounding box with a fixed seed; the fallback is flagged by
    structured=False in the returned metadata.
    """
    if density < 1:
        raise ValueError("density must be >= 1")
    m = cs.m
    anchors = _axis_anchors(cs)
    structured = True

    if m == 1:
        pts = np.linspace(-cs.radii[0], cs.radii[0], 2 * density + 1)[:, None]
    elif math.isinf(cs.q) and m <= 3:
        axes = [np.linspace(-r, r, density + 1) for r in cs.radii]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
    elif not math.isinf(cs.q) and m == 2:
        theta = 2.0 * np.pi * np.arange(density) / density
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        qnorm = np.sum(np.abs(dirs) ** cs.q, axis=1) ** (1.0 / cs.q)
        boundary = cs.rho * dirs / qnorm[:, None]
        n_shells = max(1, density // 4)
        scales = np.arange(1, n_shells + 1) / n_shells
        pts = (boundary[None, :, :] * scales[:, None, None]).reshape(-1, 2)
    else:
        structured = False
        rng = np.random.default_rng(_FALLBACK_SEED)
        target = max(density * density, 2 * density)
        kept = []
        n_kept = 0
        while n_kept < target:
            batch = rng.uniform(-cs.radii, cs.radii, size=(4 * target, m))
            if not math.isinf(cs.q):
                ok = np.sum(np.abs(batch) ** cs.q, axis=1) <= cs.rho**cs.q
                batch = batch[ok]
            kept.append(batch)
            n_kept += len(batch)
        pts = np.concatenate(kept)[:target]

    pts = _dedupe_rows(np.concatenate([anchors, pts]))
    return ControlSamples(points=pts, structured=structured)


def make_problem(
    cfg: ProblemConfig,
    dynamics: Dynamics | None = None,
    ell1: Callable[[np.ndarray], float] | None = None,
    grad_ell1: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ControlProblem:
    """Assembles a ControlProblem with the standard defaults.

    Defaults: eikonal dynamics and the quadratic state cost ||x||^2 / 2
    with its analytic gradient.
    """
    if dynamics is None:
        dynamics = eikonal_dynamics(cfg.d)
    if dynamics.m != cfg.m:
        raise ValueError("dynamics control dimension does not match cfg.m")
    if ell1 is None:
        cost = RunningCost(
            ell1=default_ell1, gamma=cfg.gamma, p=cfg.p, grad_ell1=default_ell1_grad
        )
    else:
        cost = RunningCost(ell1=ell1, gamma=cfg.gamma, p=cfg.p, grad_ell1=grad_ell1)
    return ControlProblem(
        cfg=cfg, dynamics=dynamics, cost=cost, control_set=cfg.control_set()
    )
