"""Preconditioned CG and inverse power iteration for the smallest eigenpair."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_residual: float
    converged: bool


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""

    def __init__(self, message, report):
        super().__init__(f"{message} (iterations={report.iterations}, "
                         f"residual={report.final_residual:.3e})")
        self.report = report


def _csr(A):
    A = sp.csr_matrix(A)
    A.sort_indices()
    return A


def cg_solve(A, b, tol=1e-10, maxit=10000, precond="none", x0=None, kernels=None):
    """Solve ``A x = b`` for SPD ``A`` to relative residual ``tol``.

    Returns ``(x, SolveReport)``; raises :class:`ConvergenceError` (carrying
    the report) if ``maxit`` iterations do not suffice.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    A = _csr(A)
    b = np.asarray(b, dtype=float)
    if A.shape != (len(b), len(b)):
        raise ValueError(f"dimension mismatch: A is {A.shape}, b has {len(b)} entries")
    if not np.any(b):
        return np.zeros_like(b), SolveReport(0, 0.0, True)
    if precond == "jacobi":
        dinv = 1.0 / A.diagonal()
    elif precond == "none":
        dinv = np.ones(len(b))
    else:
        raise ValueError(f"unknown preconditioner {precond!r}")
    x0 = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float)
    k = kernels or _kernels.backend
    x, it, res = k.pcg(A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data,
                       b, x0, dinv, float(tol), int(maxit))
    report = SolveReport(int(it), float(res), bool(res <= tol))
    if not report.converged:
        raise ConvergenceError("CG did not converge", report)
    return x, report


def inner_tolerance(tol):
    return max(0.01 * tol, 1e-12)


def smallest_eigenpair(A, M, tol=1e-10, maxit=500, x0=None, precond="none", kernels=None):
    """Smallest eigenpair of ``A x = lambda M x`` by inverse power iteration.

    Each step solves ``A y = M x`` with CG (warm-started at ``x / lambda``)
    and M-normalizes.  Stops when ``||A x - lambda M x|| <= tol ||A x||``.
    Returns ``(lambda, x, SolveReport)`` with ``x^T M x = 1``; the sign of
    ``x`` is not fixed.
    """
    A = _csr(A)
    M = _csr(M)
    n = A.shape[0]
    if n < 1 or A.shape != M.shape:
        raise ValueError("A and M must be square, non-empty and of equal size")
    if x0 is None:
        x = np.ones(n)
    else:
        x = np.asarray(x0, dtype=float).copy()
        if not np.any(x):
            x = np.ones(n)
    x /= np.sqrt(x @ (M @ x))
    Ax = A @ x
    lam = x @ Ax
    itol = inner_tolerance(tol)
    res = np.inf
    for it in range(maxit + 1):
        res = np.linalg.norm(Ax - lam * (M @ x)) / np.linalg.norm(Ax)
        if res <= tol:
            return lam, x, SolveReport(it, float(res), True)
        if it == maxit:
            break
        y, _ = cg_solve(A, M @ x, tol=itol, maxit=20 * n + 100, precond=precond,
                        x0=x / lam, kernels=kernels)
        x = y / np.sqrt(y @ (M @ y))
        Ax = A @ x
        lam = x @ Ax
    raise ConvergenceError("inverse iteration did not converge", SolveReport(maxit, float(res), False))
