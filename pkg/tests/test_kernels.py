"""Backend equivalence: the compiled and numpy sweeps must agree bitwise."""

import numpy as np
import pytest

from sparse_hjb import kernels


def random_tables(rng, n_nodes=200, n_cand=17, corners=4):
    v = rng.normal(size=n_nodes)
    stage = np.abs(rng.normal(size=(n_nodes, n_cand)))
    idx = rng.integers(0, n_nodes, size=(n_nodes, n_cand, corners)).astype(np.int32)
    w = np.abs(rng.normal(size=(n_nodes, n_cand, corners)))
    w /= np.sum(w, axis=2, keepdims=True)
    xstage = np.abs(rng.normal(size=n_nodes))
    xidx = rng.integers(0, n_nodes, size=(n_nodes, corners)).astype(np.int32)
    xw = np.abs(rng.normal(size=(n_nodes, corners)))
    xw /= np.sum(xw, axis=1, keepdims=True)
    return v, stage, idx, np.ascontiguousarray(w), (xstage, xidx, np.ascontiguousarray(xw))


def test_compiled_backend_is_built():
    assert "compiled" in kernels.available_backends()
    assert kernels.get_backend() == "compiled"


@pytest.mark.parametrize("with_extra", [False, True])
def test_jacobi_bitwise_equivalence(rng, with_extra):
    v, stage, idx, w, extra = random_tables(rng)
    extra = extra if with_extra else None
    outs, args, residuals = [], [], []
    for name in kernels.available_backends():
        kern = kernels.get_module(name)
        out_v = np.empty_like(v)
        out_arg = np.zeros(v.size, dtype=np.int32)
        res = kern.sweep_jacobi(v, stage, idx, w, 0.95, extra, out_v, out_arg, 1)
        outs.append(out_v)
        args.append(out_arg)
        residuals.append(res)
    assert np.array_equal(outs[0], outs[1])
    assert np.array_equal(args[0], args[1])
    assert residuals[0] == residuals[1]


@pytest.mark.parametrize("with_extra", [False, True])
def test_gauss_seidel_bitwise_equivalence(rng, with_extra):
    v, stage, idx, w, extra = random_tables(rng)
    extra = extra if with_extra else None
    perm = np.random.default_rng(3).permutation(v.size).astype(np.int32)
    states, args, residuals = [], [], []
    for name in kernels.available_backends():
        kern = kernels.get_module(name)
        vv = v.copy()
        out_arg = np.zeros(v.size, dtype=np.int32)
        res = kern.sweep_gauss_seidel(vv, stage, idx, w, 0.95, extra, perm, out_arg, 1)
        states.append(vv)
        args.append(out_arg)
        residuals.append(res)
    assert np.array_equal(states[0], states[1])
    assert np.array_equal(args[0], args[1])
    assert residuals[0] == residuals[1]


def test_argmin_keeps_first_candidate_on_ties(rng):
    # identical candidate columns: the sweep must report index 0
    n = 50
    v = rng.normal(size=n)
    stage = np.ones((n, 3))
    idx = np.tile(np.arange(n, dtype=np.int32)[:, None, None], (1, 3, 4))
    w = np.full((n, 3, 4), 0.25)
    for name in kernels.available_backends():
        kern = kernels.get_module(name)
        out_v = np.empty_like(v)
        out_arg = np.full(n, 99, dtype=np.int32)
        kern.sweep_jacobi(v, stage, idx, w, 0.9, None, out_v, out_arg, 1)
        assert np.all(out_arg == 0)


def test_injected_candidate_wins_only_strictly(rng):
    n = 20
    v = np.zeros(n)
    stage = np.ones((n, 2))
    idx = np.zeros((n, 2, 4), dtype=np.int32)
    w = np.full((n, 2, 4), 0.25)
    xidx = np.zeros((n, 4), dtype=np.int32)
    xw = np.full((n, 4), 0.25)
    tie = (np.ones(n), xidx, xw)  # equal value: shared candidate 0 must keep
    better = (np.full(n, 0.5), xidx, xw)
    for name in kernels.available_backends():
        kern = kernels.get_module(name)
        out_v = np.empty_like(v)
        out_arg = np.zeros(n, dtype=np.int32)
        kern.sweep_jacobi(v, stage, idx, w, 0.9, tie, out_v, out_arg, 1)
        assert np.all(out_arg == 0)
        kern.sweep_jacobi(v, stage, idx, w, 0.9, better, out_v, out_arg, 1)
        assert np.all(out_arg == 2)  # index n_cand flags the injected slot


def test_thread_resolution(monkeypatch):
    assert kernels.resolve_threads(3) == 3
    monkeypatch.setenv("SPARSE_HJB_THREADS", "2")
    assert kernels.resolve_threads() == 2
    monkeypatch.setenv("SPARSE_HJB_THREADS", "0")
    assert kernels.resolve_threads() >= 1
    monkeypatch.setenv("SPARSE_HJB_THREADS", "oops")
    with pytest.raises(ValueError):
        kernels.resolve_threads()
    with pytest.raises(ValueError):
        kernels.resolve_threads(-1)


def test_backend_env_override(monkeypatch):
    monkeypatch.setenv("SPARSE_HJB_KERNEL", "python")
    assert kernels.get_backend() == "python"
    monkeypatch.setenv("SPARSE_HJB_KERNEL", "compiled")
    assert kernels.get_backend() == "compiled"
    monkeypatch.setenv("SPARSE_HJB_KERNEL", "fortran")
    with pytest.raises(ValueError):
        kernels.get_backend()


def test_jacobi_multithreaded_output_identical(rng):
    v, stage, idx, w, extra = random_tables(rng, n_nodes=400)
    kern = kernels.get_module("compiled")
    single = np.empty_like(v)
    multi = np.empty_like(v)
    arg1 = np.zeros(v.size, dtype=np.int32)
    arg4 = np.zeros(v.size, dtype=np.int32)
    kern.sweep_jacobi(v, stage, idx, w, 0.95, extra, single, arg1, 1)
    kern.sweep_jacobi(v, stage, idx, w, 0.95, extra, multi, arg4, 4)
    assert np.array_equal(single, multi)
    assert np.array_equal(arg1, arg4)
