"""The compiled kernels and the pure-Python fallback must agree bit for bit."""

import numpy as np
import pytest
import scipy.sparse as sp

from meshdenoise import _backend, _fallback
from meshdenoise.cholesky import nested_dissection_ordering, permute_symmetric
from meshdenoise.graph import CSRMatrix

compiled = pytest.importorskip("meshdenoise._kernels")


def test_backend_selected():
    assert _backend.BACKEND == "compiled"
    assert _backend.kernels is compiled


def _matrix(graph, mu):
    A = graph.L.add_scaled_identity(1.0, scale=mu)
    return permute_symmetric(A, nested_dissection_ordering(A))


@pytest.mark.parametrize("m", [1, 3, 4])
def test_spmm_identical(graph3, m):
    X = np.random.default_rng(m).normal(size=(graph3.W.n_rows, m))
    for A in (graph3.W_tilde, graph3.L):
        args = (A.row_ptr, A.col_idx, A.values, X)
        np.testing.assert_array_equal(compiled.spmm(*args), _fallback.spmm(*args))


def test_spmm_random_rectangularish():
    rng = np.random.default_rng(5)
    A = CSRMatrix.from_scipy(sp.random(57, 57, density=0.2, random_state=rng, format="csr"))
    X = rng.normal(size=(57, 3))
    args = (A.row_ptr, A.col_idx, A.values, X)
    np.testing.assert_array_equal(compiled.spmm(*args), _fallback.spmm(*args))


@pytest.mark.parametrize("m", [1, 3, 5])
def test_factor_and_solve_identical(graph3, m):
    A = _matrix(graph3, 2.5)
    n = A.n_rows
    outs = []
    for k in (compiled, _fallback):
        parent = k.etree(A.row_ptr, A.col_idx, n)
        counts = k.colcounts(A.row_ptr, A.col_idx, parent, n)
        Lp = np.zeros(n + 1, np.int64)
        np.cumsum(counts, out=Lp[1:])
        Li = np.zeros(Lp[-1], np.int64)
        Lx = np.zeros(Lp[-1])
        assert k.numeric(A.row_ptr, A.col_idx, A.values, parent, Lp, Li, Lx) == -1
        B = np.array(np.random.default_rng(0).normal(size=(n, m)), order="C")
        k.solve(Lp, Li, Lx, B)
        outs.append((np.asarray(parent), Lp, Li, Lx, B))
    for a, b in zip(*outs):
        np.testing.assert_array_equal(a, b)


def test_failed_pivot_identical():
    A = CSRMatrix.from_dense([[1.0, 0, 0], [0, 1.0, 2.0], [0, 2.0, 1.0]])
    res = []
    for k in (compiled, _fallback):
        parent = k.etree(A.row_ptr, A.col_idx, 3)
        counts = k.colcounts(A.row_ptr, A.col_idx, parent, 3)
        Lp = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        res.append(k.numeric(A.row_ptr, A.col_idx, A.values, parent, Lp,
                             np.zeros(Lp[-1], np.int64), np.zeros(Lp[-1])))
    assert res == [2, 2]


def test_env_forces_fallback():
    import os
    import subprocess
    import sys
    code = ("import numpy as np, meshdenoise as m\n"
            "assert m.BACKEND == 'python', m.BACKEND\n"
            "g = m.MeshGraph.from_mesh(m.icosphere(1))\n"
            "X = m.icosphere(1).vertices\n"
            "import sys; sys.stdout.buffer.write(m.sobolev_denoise(X, g.L, 2.0).tobytes())\n")
    env = dict(os.environ, MESHDENOISE_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, check=True)
    from meshdenoise import MeshGraph, icosphere, sobolev_denoise
    got = np.frombuffer(out.stdout, dtype=np.float64).reshape(-1, 3)
    want = sobolev_denoise(icosphere(1).vertices, MeshGraph.from_mesh(icosphere(1)).L, 2.0)
    np.testing.assert_array_equal(got, want)


def test_benchmark_script_runs(capsys):
    import importlib.util
    import pathlib
    path = pathlib.Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--subdivisions", "1", "--repeats", "1"]) == 0
    assert "identical outputs: True" in capsys.readouterr().out
