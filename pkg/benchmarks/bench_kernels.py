#!/usr/bin/env python3
"""Benchmark the compiled sweep kernels against the numpy fallback.

Builds the stencil tables for a preset once, then times raw Jacobi and
Gauss-Seidel sweeps under each available backend on identical inputs.
The two backends must also agree bitwise; the benchmark asserts that.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --preset test2_p1 --repeats 30
"""

import argparse
import statistics
import time

import numpy as np

from sparse_hjb import kernels
from sparse_hjb.experiments import build_preset
from sparse_hjb.grid import zero_field
from sparse_hjb.solver import SemiLagrangianOperator, _gs_orderings


def time_sweeps(kern, op, v, perm, repeats, n_threads):
    """Median seconds per sweep for (jacobi, gauss_seidel) on one backend."""
    out = np.empty_like(v)
    args = np.zeros(v.size, dtype=np.int32)
    extra, _ = op.grid_extra(v)

    jac = []
    for _ in range(repeats + 1):
        t0 = time.perf_counter()
        kern.sweep_jacobi(v, op.stage, op.idx, op.w, op.beta, extra,
                          out, args, n_threads)
        jac.append(time.perf_counter() - t0)

    gs = []
    for _ in range(repeats + 1):
        vg = v.copy()
        t0 = time.perf_counter()
        kern.sweep_gauss_seidel(vg, op.stage, op.idx, op.w, op.beta, extra,
                                perm, args, n_threads)
        gs.append(time.perf_counter() - t0)

    # drop the warmup sweep
    return statistics.median(jac[1:]), statistics.median(gs[1:]), out, vg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="test1_p1")
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--warm-iters", type=int, default=50,
                    help="Jacobi iterations used to move v off the zero field")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    preset = build_preset(args.preset)
    spec = preset.grid
    op = SemiLagrangianOperator(preset.problem, preset.scfg, spec)
    op.ensure_grid()
    n_threads = kernels.resolve_threads(args.threads)

    # warm the field so the injected-candidate path sees a realistic gradient
    v = zero_field(spec).values.copy()
    out = np.empty_like(v)
    arg = np.zeros(spec.n_nodes, dtype=np.int32)
    for _ in range(args.warm_iters):
        extra, _ = op.grid_extra(v)
        kernels.sweep_jacobi(v, op.stage, op.idx, op.w, op.beta, extra,
                             out, arg, n_threads)
        v, out = out, v

    perm = _gs_orderings(spec, None)[0]
    backends = kernels.available_backends()
    print(f"preset={args.preset}  nodes={spec.n_nodes}  "
          f"candidates={op.stage.shape[1]}  threads={n_threads}  "
          f"repeats={args.repeats}")

    rows = {}
    outs = {}
    for name in backends:
        kern = kernels.get_module(name)
        tj, tg, oj, og = time_sweeps(kern, op, v, perm, args.repeats, n_threads)
        rows[name] = (tj, tg)
        outs[name] = (oj, og)
        print(f"{name:>9}:  jacobi {tj * 1e3:8.2f} ms/sweep   "
              f"gauss_seidel {tg * 1e3:8.2f} ms/sweep")

    if len(backends) == 2:
        cj, cg = rows["compiled"]
        pj, pg = rows["python"]
        print(f"  speedup:  jacobi {pj / cj:6.2f}x          "
              f"gauss_seidel {pg / cg:6.2f}x")
        same_j = np.array_equal(outs["compiled"][0], outs["python"][0])
        same_g = np.array_equal(outs["compiled"][1], outs["python"][1])
        print(f"  bitwise identical:  jacobi={same_j}  gauss_seidel={same_g}")
        if not (same_j and same_g):
            raise SystemExit("backends disagree")
    else:
        print("  compiled backend not built; nothing to compare")


if __name__ == "__main__":
    main()
