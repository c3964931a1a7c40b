"""Semi-Lagrangian fixed-point solver for the stationary discounted HJB equation.

One update at a state x is

    v(x) <- min_u [ dt * l(x, u) + exp(-lam dt) * interp(v, x + dt f(x, u)) ]

minimized by enumeration over a structured candidate set, optionally
augmented per node by the closed-form maximizer evaluated at switching
coefficients derived from the discrete gradient of the current iterate.
The discount factor per step is the exact exp(-lam dt), so the operator is
a sup-norm contraction with that factor and convergence is guaranteed from
any initialization (zero by default).

Jacobi sweeps are the default and the mode under which the monotonicity,
contraction, and nonnegativity properties are stated; node updates within a
Jacobi sweep are independent and may run in parallel. Gauss-Seidel sweeps
(in place, alternating through the 2^d axis orderings) are offered as an
accelerator and are sequential by definition.

Argmin ties are broken by preferring u = 0, then lexicographic candidate
order; the injected closed-form candidate is evaluated last, so it wins
only strictly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .grid import GridSpec, ValueField, grid_points, interpolation_stencil
from .maximizer import closed_form_batch
from .problem import ControlProblem, sample_control_set

__all__ = [
    "SolverConfig",
    "SolveReport",
    "SemiLagrangianOperator",
    "sl_update",
    "solve",
    "residual_rate",
    "max_speed",
]


@dataclass(frozen=True)
class SolverConfig:
    """Numerical parameters of the semi-Lagrangian iteration.

    Attributes:
        dt: semi-Lagrangian time step (> 0); dt * max |f| must not exceed
            the domain diameter so foot points stay near the grid.
        tol: sup-norm stopping tolerance.
        max_iters: iteration cap.
        sweep: "jacobi" (default) or "gauss_seidel".
        control_density: density passed to sample_control_set.
        use_closed_form_candidates: inject per-node closed-form maximizer
            candidates (active only for p <= 1 with gamma > 0).
        n_threads: Jacobi thread cap; None defers to SPARSE_HJB_THREADS.
        pinned_nodes: optional (flat indices, values) held fixed through the
            iteration; used for target conditions such as the minimum-time
            formulation.
    """

    dt: float
    tol: float = 1e-8
    max_iters: int = 20_000
    sweep: str = "jacobi"
    control_density: int = 32
    use_closed_form_candidates: bool = True
    n_threads: int | None = None
    pinned_nodes: tuple | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.sweep not in ("jacobi", "gauss_seidel"):
            raise ValueError(f"unknown sweep mode {self.sweep!r}")
        if self.control_density < 1:
            raise ValueError("control_density must be >= 1")


@dataclass
class SolveReport:
    """Iteration diagnostics; converged implies final_residual <= tol.

    argmin_controls holds the control recorded per node by the final sweep
    (an argmin pass against the converged field), which the feedback map
    reproduces exactly.
    """

    iterations: int
    final_residual: float
    residual_history: np.ndarray
    converged: bool
    argmin_controls: np.ndarray | None = None
    backend: str = ""
    sweep: str = "jacobi"
    elapsed_s: float = 0.0


def _ordered_candidates(points: np.ndarray) -> np.ndarray:
    """Zero control first, then lexicographic order (the tie-break order)."""
    rows = sorted(tuple(p) for p in points)
    zero = tuple(0.0 for _ in range(points.shape[1]))
    rows = [zero] + [r for r in rows if r != zero]
    return np.asarray(rows, dtype=float)


def max_speed(problem: ControlProblem, spec: GridSpec) -> float:
    """Max of ||f(x, u)||_2 over grid nodes and the axis-extreme controls."""
    X = grid_points(spec)
    dyn = problem.dynamics
    f0 = np.stack([np.asarray(dyn.f0(x), dtype=float) for x in X])
    F = np.stack([dyn.channel_matrix(x) for x in X])
    radii = problem.control_set.radii
    m = problem.cfg.m
    anchors = [np.zeros(m)]
    for i in range(m):
        e = np.zeros(m)
        e[i] = radii[i]
        anchors.extend([e.copy(), -e])
    best = 0.0
    for u in anchors:
        speed = np.linalg.norm(f0 + F @ u, axis=1)
        best = max(best, float(np.max(speed)))
    return best


class SemiLagrangianOperator:
    """Precomputed discrete Bellman operator on a fixed grid.

    Holds, for every (node, candidate) pair, the stage cost and the
    interpolation stencil of the Euler foot point. Both the grid sweeps and
    single-point evaluations (the feedback map) run through the same kernel
    arithmetic, so they agree bitwise.
    """

    def __init__(self, problem: ControlProblem, scfg: SolverConfig, spec: GridSpec):
        cfg = problem.cfg
        if cfg.d != spec.d:
            raise ValueError("problem and grid dimensions disagree")
        self.problem = problem
        self.scfg = scfg
        self.spec = spec
        self.beta = math.exp(-cfg.lam * scfg.dt)

        samples = sample_control_set(problem.control_set, scfg.control_density)
        self.candidates = _ordered_candidates(samples.points)
        self.sampling_structured = samples.structured
        self.n_candidates = len(self.candidates)

        self.inject = (
            scfg.use_closed_form_candidates and cfg.p <= 1.0 and cfg.gamma > 0.0
        )
        self._dv_cache = (None, None)
        self._grid_ready = False

    def ensure_grid(self) -> None:
        """Builds the full-grid tables on first use.

        Deferred because single-point feedback queries never need them; a
        grid sweep over N nodes and K candidates stores O(N K 2^d) stencil
        data.
        """
        if self._grid_ready:
            return
        dyn = self.problem.dynamics
        self.X = grid_points(self.spec)
        self.f0X = np.stack([np.asarray(dyn.f0(x), dtype=float) for x in self.X])
        self.FX = np.stack([dyn.channel_matrix(x) for x in self.X])
        self.ell1X = np.asarray(
            [self.problem.cost.ell1(x) for x in self.X], dtype=float
        )
        self.stage, self.idx, self.w = self._stencil_block(
            self.X, self.f0X, self.FX, self.ell1X, self.candidates
        )
        self._grid_ready = True

    # ---- shared precompute paths -------------------------------------------------

    def _stencil_block(self, X, f0, F, ell1, U):
        """Stage costs and foot-point stencils for a block of states x rows
        of candidates U; identical code path for the full grid and for
        single-point feedback queries."""
        cfg = self.problem.cfg
        dt = self.scfg.dt
        foot = X[:, None, :] + dt * (
            f0[:, None, :] + np.einsum("ndm,km->nkd", F, U)
        )
        idx, w = interpolation_stencil(self.spec, foot)
        penalty = cfg.gamma * np.sum(np.abs(U) ** cfg.p, axis=1)
        stage = dt * (ell1[:, None] + penalty[None, :])
        return np.ascontiguousarray(stage), idx, w

    def _extra_block(self, X, f0, F, ell1, DV):
        """Injected closed-form candidates for a block of states."""
        cfg = self.problem.cfg
        dt = self.scfg.dt
        C = -np.einsum("nd,ndm->nm", DV, F) / cfg.gamma
        U = closed_form_batch(C, cfg.p, cfg.q, self.problem.control_set.radii)
        foot = X + dt * (f0 + np.einsum("ndm,nm->nd", F, U))
        xidx, xw = interpolation_stencil(self.spec, foot)
        penalty = cfg.gamma * np.sum(np.abs(U) ** cfg.p, axis=1)
        xstage = np.ascontiguousarray(dt * (ell1 + penalty))
        return (xstage, xidx, xw), U

    def _gradient(self, values: np.ndarray) -> np.ndarray:
        """Central-difference gradient field, one-sided at the boundary."""
        vg = values.reshape(self.spec.n_per_dim)
        mesh = self.spec.mesh
        if self.spec.d == 1:
            grads = [np.gradient(vg, mesh[0])]
        else:
            grads = np.gradient(vg, *mesh)
        return np.stack([g.ravel() for g in grads], axis=1)

    def grid_extra(self, values: np.ndarray):
        """Per-node injected candidates for a sweep, from the current iterate."""
        if not self.inject:
            return None, None
        self.ensure_grid()
        DV = self._gradient(values)
        return self._extra_block(self.X, self.f0X, self.FX, self.ell1X, DV)

    # ---- evaluations ---------------------------------------------------------------

    def point(self, v: ValueField, x: Sequence[float]):
        """Bellman update at a single state: (value, argmin control).

        The injected candidate uses the discrete gradient at the nearest
        grid node, so queries at nodes agree bitwise with grid sweeps.
        """
        from .grid import coords_to_nearest_index

        x = self.spec.clamp(np.asarray(x, dtype=float))
        dyn = self.problem.dynamics
        X = x[None, :]
        f0 = np.asarray(dyn.f0(x), dtype=float)[None, :]
        F = dyn.channel_matrix(x)[None, :, :]
        ell1 = np.asarray([self.problem.cost.ell1(x)], dtype=float)
        stage, idx, w = self._stencil_block(X, f0, F, ell1, self.candidates)

        extra = None
        u_inj = None
        if self.inject:
            if self._dv_cache[0] is not v.values:
                self._dv_cache = (v.values, self._gradient(v.values))
            DV = self._dv_cache[1][coords_to_nearest_index(self.spec, x)][None, :]
            extra, U = self._extra_block(X, f0, F, ell1, DV)
            u_inj = U[0]

        out_v = np.empty(1)
        out_arg = np.zeros(1, dtype=np.int32)
        kernels.sweep_jacobi(
            v.values, stage, idx, w, self.beta, extra, out_v, out_arg, 1
        )
        k = int(out_arg[0])
        u = u_inj if k == self.n_candidates else self.candidates[k]
        return float(out_v[0]), np.asarray(u, dtype=float).copy()

    def controls_from_args(self, args: np.ndarray, U_inj: np.ndarray | None):
        """Maps kernel argmin indices to control vectors."""
        safe = np.minimum(args, self.n_candidates - 1)
        controls = self.candidates[safe].copy()
        if U_inj is not None:
            injected = args == self.n_candidates
            controls[injected] = U_inj[injected]
        return controls


def _gs_orderings(spec: GridSpec, exclude: np.ndarray | None):
    """The 2^d alternating Gauss-Seidel visitation orders (axis flips)."""
    base = np.arange(spec.n_nodes, dtype=np.int32).reshape(spec.n_per_dim)
    perms = []
    for combo in range(1 << spec.d):
        arr = base
        for a in range(spec.d):
            if (combo >> a) & 1:
                arr = np.flip(arr, axis=a)
        perm = np.ascontiguousarray(arr.ravel())
        if exclude is not None and exclude.size:
            perm = np.ascontiguousarray(perm[~np.isin(perm, exclude)])
        perms.append(perm)
    return perms


def solve(initial: ValueField, problem: ControlProblem, scfg: SolverConfig):
    """Iterates full-grid sweeps until the sup-norm change is <= tol.

    Returns (ValueField, SolveReport). Non-convergence within max_iters is
    reported (converged=False), not raised; a NaN in the iterate aborts with
    FloatingPointError.
    """
    spec = initial.spec
    op = SemiLagrangianOperator(problem, scfg, spec)
    if scfg.dt * max_speed(problem, spec) > spec.diameter:
        raise ValueError("dt * max |f| exceeds the domain diameter")
    op.ensure_grid()

    n_threads = kernels.resolve_threads(scfg.n_threads)
    v = initial.values.copy()
    pin_idx = pin_val = None
    if scfg.pinned_nodes is not None:
        pin_idx = np.asarray(scfg.pinned_nodes[0], dtype=np.int64)
        pin_val = np.asarray(scfg.pinned_nodes[1], dtype=float)
        v[pin_idx] = pin_val

    args = np.zeros(spec.n_nodes, dtype=np.int32)
    residuals = []
    converged = False
    iterations = 0
    res = math.inf
    start = time.perf_counter()

    if scfg.sweep == "jacobi":
        out = np.empty_like(v)
        for iterations in range(1, scfg.max_iters + 1):
            extra, _ = op.grid_extra(v)
            kernels.sweep_jacobi(
                v, op.stage, op.idx, op.w, op.beta, extra, out, args, n_threads
            )
            if pin_idx is not None:
                out[pin_idx] = pin_val
            res = float(np.max(np.abs(out - v)))
            v, out = out, v
            if not math.isfinite(res):
                raise FloatingPointError("non-finite residual in SL iteration")
            residuals.append(res)
            if res <= scfg.tol:
                converged = True
                break
    else:
        perms = _gs_orderings(spec, pin_idx)
        for iterations in range(1, scfg.max_iters + 1):
            extra, _ = op.grid_extra(v)
            perm = perms[(iterations - 1) % len(perms)]
            res = kernels.sweep_gauss_seidel(
                v, op.stage, op.idx, op.w, op.beta, extra, perm, args, n_threads
            )
            if not math.isfinite(res):
                raise FloatingPointError("non-finite residual in SL iteration")
            residuals.append(res)
            if res <= scfg.tol:
                converged = True
                break

    # Final argmin pass against the converged field; this is the record the
    # feedback map must reproduce.
    extra, U_inj = op.grid_extra(v)
    final_out = np.empty_like(v)
    kernels.sweep_jacobi(
        v, op.stage, op.idx, op.w, op.beta, extra, final_out, args, n_threads
    )
    controls = op.controls_from_args(args, U_inj)
    if pin_idx is not None:
        controls[pin_idx] = 0.0

    report = SolveReport(
        iterations=iterations,
        final_residual=res,
        residual_history=np.asarray(residuals),
        converged=converged,
        argmin_controls=controls,
        backend=kernels.get_backend(),
        sweep=scfg.sweep,
        elapsed_s=time.perf_counter() - start,
    )
    return ValueField(spec=spec, values=v), report


def sl_update(v: ValueField, x, problem: ControlProblem, scfg: SolverConfig):
    """One Bellman update at x: (updated value, argmin control).

    Convenience wrapper that builds the operator; for repeated queries use
    SemiLagrangianOperator directly.
    """
    op = SemiLagrangianOperator(problem, scfg, v.spec)
    return op.point(v, x)


def residual_rate(report: SolveReport) -> float:
    """Geometric mean of successive residual ratios over the last 10 steps.

    By telescoping this is (r_end / r_start)^(1/k) over the trailing window
    of k <= 10 ratios. Returns 0.0 if the window touches an exact zero
    residual. Requires at least 10 recorded residuals.
    """
    r = np.asarray(report.residual_history, dtype=float)
    if r.size < 10:
        raise ValueError("need at least 10 recorded residuals")
    window = r[-11:]
    if window[0] == 0.0 or window[-1] == 0.0:
        return 0.0
    k = window.size - 1
    return float((window[-1] / window[0]) ** (1.0 / k))
