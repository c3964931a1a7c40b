"""Pure-Python (numpy) sweep kernels.

Fallback used when the compiled extension is unavailable. The arithmetic
matches the compiled kernels operation for operation (sequential corner
accumulation, strict-less argmin keeping the earliest candidate), so both
backends produce bitwise-identical sweeps.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def _candidate_values(v, stage_n, idx_n, w_n, beta):
    # stage_n (K,), idx_n (K, C), w_n (K, C) for one node.
    corners = v[idx_n]
    acc = w_n[:, 0] * corners[:, 0]
    for j in range(1, idx_n.shape[1]):
        acc = acc + w_n[:, j] * corners[:, j]
    return stage_n + beta * acc


def sweep_jacobi(v, stage, idx, w, beta, extra, out_v, out_arg, n_threads=1):
    """One Jacobi sweep against the frozen iterate v.

    extra is None or (xstage, xidx, xw): one injected candidate per node,
    evaluated after the shared candidate list so it wins only strictly.
    Returns the sup-norm residual max |out_v - v|.
    """
    n_nodes, n_cand = stage.shape
    best = np.empty(n_nodes)
    barg = np.zeros(n_nodes, dtype=np.int32)
    acc = np.empty(n_nodes)
    for k in range(n_cand):
        corners = v[idx[:, k, :]]
        np.multiply(w[:, k, 0], corners[:, 0], out=acc)
        for j in range(1, idx.shape[2]):
            acc += w[:, k, j] * corners[:, j]
        val = stage[:, k] + beta * acc
        if k == 0:
            best[:] = val
        else:
            better = val < best
            best[better] = val[better]
            barg[better] = k
    if extra is not None:
        xstage, xidx, xw = extra
        corners = v[xidx]
        np.multiply(xw[:, 0], corners[:, 0], out=acc)
        for j in range(1, xidx.shape[1]):
            acc += xw[:, j] * corners[:, j]
        val = xstage + beta * acc
        better = val < best
        best[better] = val[better]
        barg[better] = n_cand
    out_v[:] = best
    out_arg[:] = barg
    return float(np.max(np.abs(out_v - v)))


def sweep_gauss_seidel(v, stage, idx, w, beta, extra, perm, out_arg, n_threads=1):
    """One in-place Gauss-Seidel sweep visiting nodes in perm order.

    Mutates v and returns the sup-norm of the changes.
    """
    n_cand = stage.shape[1]
    res = 0.0
    for n in perm:
        vals = _candidate_values(v, stage[n], idx[n], w[n], beta)
        k = int(np.argmin(vals))
        best = vals[k]
        if extra is not None:
            xstage, xidx, xw = extra
            corners = v[xidx[n]]
            acc = xw[n, 0] * corners[0]
            for j in range(1, xidx.shape[1]):
                acc = acc + xw[n, j] * corners[j]
            val = xstage[n] + beta * acc
            if val < best:
                best = val
                k = n_cand
        change = abs(best - v[n])
        if change > res:
            res = change
        v[n] = best
        out_arg[n] = k
    return float(res)
