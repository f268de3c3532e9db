"""Time the numba kernels against the pure-numpy fallback.

Uses matrices from an actual unit-square P1 Hamiltonian so the sizes and
sparsity match what the solver sees.

    python3 benchmarks/bench_kernels.py [--n 24 96 192] [--repeat 5]

On small and mid-sized systems the numba PCG wins by avoiding per-iteration
interpreter overhead; on large ones scipy's C matvec inside the numpy loop
catches up.
"""
import argparse
import time

import numpy as np

from gpebound import _kernels
from gpebound.fem.p1 import P1Space, local_mass, local_stiffness
from gpebound.mesh import unit_square_mesh


def best_of(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


def run(size, repeat):
    mesh = unit_square_mesh(size)
    space = P1Space(mesh)
    local = local_stiffness(mesh) + local_mass(mesh)
    A = space.interior_assembler.assemble(local).tocsr()
    A.sort_indices()
    indptr, indices = A.indptr.astype(np.int64), A.indices.astype(np.int64)
    n = A.shape[0]
    b = np.ones(n)
    x0 = np.zeros(n)
    dinv = 1.0 / A.diagonal()
    # assembly-sized scatter: one entry per local matrix coefficient
    rng = np.random.default_rng(0)
    pos = rng.integers(0, A.nnz, size=9 * mesh.n_triangles).astype(np.int64)
    vals = rng.standard_normal(pos.size)

    backends = [_kernels.numpy_backend]
    if _kernels.numba_backend is not None:
        backends.append(_kernels.numba_backend)
        # compile once outside the timings
        k = _kernels.numba_backend
        k.scatter_add(pos[:10], vals[:10], A.nnz)
        k.csr_matvec(indptr, indices, A.data, b)
        k.pcg(indptr, indices, A.data, b, x0, dinv, 1e-10, 10)

    print(f"mesh n={size}: {n} unknowns, nnz={A.nnz}, scatter size {pos.size}")
    print(f"{'kernel':<14}{'backend':<8}{'best [ms]':>12}{'check':>24}")
    results = {}
    for k in backends:
        cases = {
            "scatter_add": lambda: k.scatter_add(pos, vals, A.nnz),
            "csr_matvec": lambda: k.csr_matvec(indptr, indices, A.data, b),
            "pcg": lambda: k.pcg(indptr, indices, A.data, b, x0, dinv, 1e-10, 10 * n),
        }
        for name, fn in cases.items():
            t = best_of(fn, repeat)
            out = fn()
            check = float(np.sum(out[0] if isinstance(out, tuple) else out))
            results[name, k.name] = (t, check)
            print(f"{name:<14}{k.name:<8}{1e3 * t:>12.3f}{check:>24.12g}")

    if _kernels.numba_backend is not None:
        print()
        for name in ("scatter_add", "csr_matvec", "pcg"):
            t_np, c_np = results[name, "numpy"]
            t_nb, c_nb = results[name, "numba"]
            print(f"{name:<14} speedup {t_np / t_nb:6.2f}x  |diff| {abs(c_np - c_nb):.2e}")
    print()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[24, 96, 192], help="unit-square subdivisions")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    for size in args.n:
        run(size, args.repeat)


if __name__ == "__main__":
    main()
