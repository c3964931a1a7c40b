"""Sweep-kernel backend selection.

The compiled Cython kernels are preferred; the numpy fallback is selected
automatically when the extension is missing. Both produce bitwise-identical
sweeps. SPARSE_HJB_KERNEL=python|compiled forces a backend,
SPARSE_HJB_THREADS caps Jacobi concurrency (0 or unset means auto).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

__all__ = [
    "available_backends",
    "get_backend",
    "resolve_threads",
    "sweep_jacobi",
    "sweep_gauss_seidel",
]


def available_backends():
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return tuple(names)


def _select():
    forced = os.environ.get("SPARSE_HJB_KERNEL", "").strip().lower()
    if forced == "python":
        return _kernels_py
    if forced == "compiled":
        if _compiled is None:
            raise ImportError(
                "SPARSE_HJB_KERNEL=compiled but the sparse_hjb._kernels "
                "extension is not built"
            )
        return _compiled
    if forced:
        raise ValueError(f"unknown SPARSE_HJB_KERNEL value {forced!r}")
    return _compiled if _compiled is not None else _kernels_py


def get_backend() -> str:
    """Name of the backend the solver will use ('compiled' or 'python')."""
    return _select().BACKEND_NAME


def get_module(name: str | None = None):
    """Kernel module by name, or the selected default."""
    if name is None:
        return _select()
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def resolve_threads(n_threads: int | None = None) -> int:
    """Thread count for the Jacobi sweep.

    Explicit argument wins; otherwise SPARSE_HJB_THREADS, where 0 (or an
    unset variable) means all available cores.
    """
    if n_threads is None:
        raw = os.environ.get("SPARSE_HJB_THREADS", "0").strip() or "0"
        try:
            n_threads = int(raw)
        except ValueError as exc:
            raise ValueError(f"SPARSE_HJB_THREADS must be an integer: {raw!r}") from exc
    if n_threads < 0:
        raise ValueError("thread count must be >= 0")
    if n_threads == 0:
        n_threads = os.cpu_count() or 1
    return n_threads


def sweep_jacobi(v, stage, idx, w, beta, extra, out_v, out_arg, n_threads=1):
    return _select().sweep_jacobi(
        v, stage, idx, w, beta, extra, out_v, out_arg, n_threads
    )


def sweep_gauss_seidel(v, stage, idx, w, beta, extra, perm, out_arg, n_threads=1):
    return _select().sweep_gauss_seidel(
        v, stage, idx, w, beta, extra, perm, out_arg, n_threads
    )
