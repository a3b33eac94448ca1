"""Compare the compiled kernels with the pure-Python fallback.

Times spmm (40 passes of the averaging operator), the numeric Cholesky
factorization of I + mu L, and one three-column solve on an icosphere, and
checks that both backends return identical arrays.

    python benchmarks/bench_kernels.py --subdivisions 4 --repeats 5
"""

import argparse
import sys

import numpy as np

from meshdenoise import _fallback
from meshdenoise.bench import time_method
from meshdenoise.cholesky import nested_dissection_ordering, permute_symmetric, symbolic
from meshdenoise.graph import MeshGraph
from meshdenoise.mesh import icosphere

try:
    from meshdenoise import _kernels as _compiled
except ImportError:
    _compiled = None


def run(k, graph, A, X, repeats):
    Wt = graph.W_tilde
    n = A.n_rows

    def filter40():
        Y = X
        for _ in range(40):
            Y = k.spmm(Wt.row_ptr, Wt.col_idx, Wt.values, Y)
        return Y

    parent, colptr = symbolic(A)
    Li = np.zeros(colptr[-1], np.int64)
    Lx = np.zeros(colptr[-1])

    def factor():
        k.numeric(A.row_ptr, A.col_idx, A.values, parent, colptr, Li, Lx)

    factor()

    def solve():
        B = X.copy()
        k.solve(colptr, Li, Lx, B)
        return B

    times = {name: time_method(fn, repeats) for name, fn in
             (("filter x40", filter40), ("factor", factor), ("solve", solve))}
    return times, (filter40(), Lx.copy(), solve())


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--subdivisions", type=int, default=3)
    p.add_argument("--mu", type=float, default=51.0)
    p.add_argument("--repeats", type=int, default=5)
    args = p.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    mesh = icosphere(args.subdivisions)
    g = MeshGraph.from_mesh(mesh)
    A = g.L.add_scaled_identity(1.0, scale=args.mu)
    A = permute_symmetric(A, nested_dissection_ordering(A))
    X = np.ascontiguousarray(mesh.vertices)
    tc, oc = run(_compiled, g, A, X, args.repeats)
    tp, op = run(_fallback, g, A, X, args.repeats)
    same = all(np.array_equal(a, b) for a, b in zip(oc, op))
    print(f"n={mesh.n_vertices}  repeats={args.repeats}  identical outputs: {same}")
    print(f"{'kernel':<12}{'compiled ms':>14}{'python ms':>14}{'speedup':>10}")
    for name in tc:
        c, py = tc[name].median_ms, tp[name].median_ms
        print(f"{name:<12}{c:>14.3f}{py:>14.3f}{py / c:>9.1f}x")
    return 0 if same else 2


if __name__ == "__main__":
    sys.exit(main())
