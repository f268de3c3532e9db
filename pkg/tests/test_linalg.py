import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from gpebound import _kernels
from gpebound.linalg import ConvergenceError, cg_solve, smallest_eigenpair

BACKENDS = [_kernels.numpy_backend] + ([_kernels.numba_backend] if _kernels.numba_backend else [])


@pytest.fixture(params=BACKENDS, ids=lambda k: k.name)
def kernels(request):
    return request.param


def test_identity(kernels):
    b = np.array([1.0, -2.0, 3.0])
    x, rep = cg_solve(sp.identity(3), b, kernels=kernels)
    np.testing.assert_allclose(x, b)
    assert rep.iterations <= 1 and rep.converged


def test_tridiagonal_oracle(kernels):
    A = sp.diags([[-1, -1], [2, 2, 2], [-1, -1]], [-1, 0, 1])
    x, _ = cg_solve(A, np.array([1.0, 0.0, 0.0]), tol=1e-14, kernels=kernels)
    np.testing.assert_allclose(x, np.linalg.solve(A.toarray(), [1, 0, 0]), atol=1e-14)
    np.testing.assert_allclose(x, [0.75, 0.5, 0.25], atol=1e-14)


def test_zero_rhs(kernels):
    x, rep = cg_solve(sp.identity(4) * 3.0, np.zeros(4), kernels=kernels)
    assert not np.any(x) and rep.iterations == 0


def test_jacobi_and_errors(rng):
    n = 30
    B = rng.standard_normal((n, n))
    A = B @ B.T + n * np.diag(rng.uniform(1, 100, n))
    b = rng.standard_normal(n)
    x, _ = cg_solve(A, b, tol=1e-12, precond="jacobi")
    np.testing.assert_allclose(A @ x, b, atol=1e-9 * np.linalg.norm(b))
    with pytest.raises(ConvergenceError) as info:
        cg_solve(A, b, tol=1e-12, maxit=2)
    assert info.value.report.iterations == 2 and not info.value.report.converged
    with pytest.raises(ValueError):
        cg_solve(A, b[:-1])
    with pytest.raises(ValueError):
        cg_solve(A, b, precond="ilu")


def test_backends_agree(rng):
    if len(BACKENDS) < 2:
        pytest.skip("numba not installed")
    n = 50
    A = sp.diags([-np.ones(n - 1), 2.5 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    b = rng.standard_normal(n)
    x0, r0 = cg_solve(A, b, kernels=BACKENDS[0])
    x1, r1 = cg_solve(A, b, kernels=BACKENDS[1])
    assert r0.iterations == r1.iterations
    np.testing.assert_allclose(x0, x1, rtol=1e-10, atol=1e-12)
    x = rng.standard_normal(n)
    for k in BACKENDS:
        y = k.csr_matvec(A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data, x)
        np.testing.assert_allclose(y, A @ x, atol=1e-14)


def test_eigen_diag():
    lam, x, _ = smallest_eigenpair(sp.diags([1.0, 2.0, 3.0]), sp.identity(3))
    assert lam == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(np.abs(x), [1, 0, 0], atol=1e-6)


def test_eigen_generalized_diag():
    M = sp.diags([2.0, 2.0, 3.0])
    lam, x, _ = smallest_eigenpair(sp.diags([4.0, 4.0, 9.0]), M)
    assert lam == pytest.approx(2.0, abs=1e-12)
    assert abs(x[2]) < 1e-6
    assert x @ (M @ x) == pytest.approx(1.0, abs=1e-12)


def test_eigen_random_vs_dense(rng, kernels):
    n = 8
    B = rng.standard_normal((n, n))
    A = B @ B.T + n * np.eye(n)
    C = rng.standard_normal((n, n))
    M = C @ C.T + n * np.eye(n)
    w, V = sla.eigh(A, M)
    lam, x, rep = smallest_eigenpair(A, M, tol=1e-12, maxit=5000, kernels=kernels)
    assert rep.converged
    assert lam == pytest.approx(w[0], abs=1e-9)
    v = V[:, 0] / np.sqrt(V[:, 0] @ M @ V[:, 0])
    assert min(np.abs(x - v).max(), np.abs(x + v).max()) < 1e-5


def test_eigen_permutation_invariance(rng):
    n = 12
    A = sp.diags([-np.ones(n - 1), 2.0 * np.ones(n) + np.arange(n) / n, -np.ones(n - 1)], [-1, 0, 1])
    M = sp.identity(n)
    perm = rng.permutation(n)
    P = sp.identity(n).tocsr()[perm]
    l1, _, _ = smallest_eigenpair(A, M, tol=1e-12, maxit=5000)
    l2, _, _ = smallest_eigenpair(P @ A @ P.T, M, tol=1e-12, maxit=5000)
    assert l1 == pytest.approx(l2, rel=1e-11)


def test_eigen_rejects_bad_shapes():
    with pytest.raises(ValueError):
        smallest_eigenpair(sp.identity(3), sp.identity(2))


@pytest.mark.parametrize("flag,expected", [("1", "numpy"), ("", None)])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, GPEBOUND_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "import gpebound; print(gpebound.kernel_backend.name)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    if expected is None:
        expected = "numba" if _kernels.numba_backend is not None else "numpy"
    assert out == expected
