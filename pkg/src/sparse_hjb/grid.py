"""Uniform rectangular grids, multilinear interpolation, and field CSV I/O.

Flattening convention is row-major with the last axis fastest, fixed and
tested. Query points outside the domain are clamped to the boundary, which
extends the field constantly outward. Interpolation weights are convex, so
the interpolant stays between the smallest and largest corner value of the
enclosing cell; the monotonicity of the solver rests on this.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "ValueField",
    "square_grid",
    "zero_field",
    "node_coords",
    "coords_to_nearest_index",
    "grid_points",
    "interpolation_stencil",
    "interpolate",
    "interpolate_many",
    "write_field_csv",
    "read_field_csv",
    "write_csv",
]

# One float format for every CSV we emit: 17 significant digits, enough for
# bit-exact float64 round-trips.
FLOAT_FORMAT = "%.16e"


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Uniform rectangular grid on the box [lo, hi]."""

    lo: np.ndarray
    hi: np.ndarray
    n_per_dim: tuple

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        n = tuple(int(k) for k in np.atleast_1d(self.n_per_dim))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "n_per_dim", n)
        if lo.ndim != 1 or lo.shape != hi.shape or len(n) != lo.size:
            raise ValueError("lo, hi, n_per_dim must describe the same dimension")
        if not np.all(hi > lo):
            raise ValueError("hi must exceed lo componentwise")
        if any(k < 2 for k in n):
            raise ValueError("need at least 2 nodes per dimension")

    @property
    def d(self) -> int:
        return self.lo.size

    @property
    def mesh(self) -> np.ndarray:
        n = np.asarray(self.n_per_dim, dtype=float)
        return (self.hi - self.lo) / (n - 1.0)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.n_per_dim))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)


def square_grid(half_width: float, mesh: float, d: int = 2) -> GridSpec:
    """[-h, h]^d with the given spacing; h must be an integer multiple of mesh."""
    n = int(round(2.0 * half_width / mesh)) + 1
    return GridSpec(
        lo=-half_width * np.ones(d), hi=half_width * np.ones(d), n_per_dim=(n,) * d
    )


@dataclass(eq=False)
class ValueField:
    """Scalar samples on a grid, flat row-major (last axis fastest)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float).ravel())
        if v.size != self.spec.n_nodes:
            raise ValueError("values length must equal the node count")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must all be finite")
        self.values = v

    def copy(self) -> "ValueField":
        return ValueField(spec=self.spec, values=self.values.copy())


def zero_field(spec: GridSpec) -> ValueField:
    return ValueField(spec=spec, values=np.zeros(spec.n_nodes))


def node_coords(spec: GridSpec, flat_index: int) -> np.ndarray:
    """Coordinates of a node given its flat row-major index."""
    if not 0 <= flat_index < spec.n_nodes:
        raise ValueError(f"flat index {flat_index} out of range")
    multi = np.unravel_index(flat_index, spec.n_per_dim)
    return spec.lo + spec.mesh * np.asarray(multi, dtype=float)


def coords_to_nearest_index(spec: GridSpec, x: Sequence[float]) -> int:
    """Flat index of the grid node nearest to x (after clamping)."""
    x = spec.clamp(np.asarray(x, dtype=float))
    multi = np.rint((x - spec.lo) / spec.mesh).astype(int)
    multi = np.minimum(np.maximum(multi, 0), np.asarray(spec.n_per_dim) - 1)
    return int(np.ravel_multi_index(tuple(multi), spec.n_per_dim))


def grid_points(spec: GridSpec) -> np.ndarray:
    """All node coordinates, shape (n_nodes, d), in flat order."""
    axes = [
        np.linspace(spec.lo[a], spec.hi[a], spec.n_per_dim[a]) for a in range(spec.d)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def interpolation_stencil(spec: GridSpec, pts: np.ndarray):
    """Corner indices and convex weights of the multilinear interpolant.

    Points are clamped into the domain first. Returns (idx, w) with shapes
    (..., 2**d); the weights are in [0, 1] and sum to 1, and the interpolant
    sum_j w_j * values[idx_j] is exact at nodes and on affine functions.
    """
    pts = np.asarray(pts, dtype=float)
    if not np.all(np.isfinite(pts)):
        raise ValueError("query points must be finite")
    d = spec.d
    t = (spec.clamp(pts) - spec.lo) / spec.mesh
    n = np.asarray(spec.n_per_dim)
    base = np.minimum(np.floor(t).astype(np.int64), n - 2)
    base = np.maximum(base, 0)
    frac = np.clip(t - base, 0.0, 1.0)

    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * n[a + 1]

    n_corners = 1 << d
    idx = np.empty(pts.shape[:-1] + (n_corners,), dtype=np.int32)
    w = np.empty(pts.shape[:-1] + (n_corners,), dtype=float)
    for corner in range(n_corners):
        flat = np.zeros(pts.shape[:-1], dtype=np.int64)
        weight = np.ones(pts.shape[:-1])
        for a in range(d):
            bit = (corner >> (d - 1 - a)) & 1
            flat = flat + (base[..., a] + bit) * strides[a]
            weight = weight * (frac[..., a] if bit else 1.0 - frac[..., a])
        idx[..., corner] = flat
        w[..., corner] = weight
    return idx, w


def interpolate(field: ValueField, x: Sequence[float]) -> float:
    """Multilinear interpolation at x, clamped into the domain."""
    x = np.asarray(x, dtype=float)
    if x.shape != (field.spec.d,):
        raise ValueError(f"query must have shape ({field.spec.d},)")
    idx, w = interpolation_stencil(field.spec, x)
    return float(np.dot(w, field.values[idx]))


def interpolate_many(field: ValueField, pts: np.ndarray) -> np.ndarray:
    idx, w = interpolation_stencil(field.spec, np.asarray(pts, dtype=float))
    return np.sum(w * field.values[idx], axis=-1)


def write_csv(path, header: Sequence[str], rows: np.ndarray) -> None:
    """Writes a numeric CSV with the shared float format.

    Raises:
        OSError: on any I/O failure, with the path in the message.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(FLOAT_FORMAT % v for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {str(path)!r}: {exc}") from exc


def write_field_csv(field: ValueField, path) -> None:
    """Emits header x1,...,xd,v then one row per node in flat order.

    Values round-trip bit-for-bit through read_field_csv.
    """
    d = field.spec.d
    header = [f"x{a + 1}" for a in range(d)] + ["v"]
    rows = np.column_stack([grid_points(field.spec), field.values])
    write_csv(path, header, rows)


def read_field_csv(path) -> ValueField:
    """Reads a field written by write_field_csv (same flat node order)."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read field CSV from {str(path)!r}: {exc}") from exc
    coords, values = data[:, :-1], data[:, -1]
    n_per_dim = tuple(np.unique(coords[:, a]).size for a in range(coords.shape[1]))
    spec = GridSpec(lo=coords[0], hi=coords[-1], n_per_dim=n_per_dim)
    if spec.n_nodes != len(values):
        raise ValueError(f"CSV at {str(path)!r} is not a full grid")
    return ValueField(spec=spec, values=values)
