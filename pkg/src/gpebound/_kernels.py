"""Hot inner loops with a numba path and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``GPEBOUND_DISABLE_NUMBA=1``
to force the numpy path (also used automatically when numba is missing).
Both backends expose the same three functions:

    scatter_add(pos, vals, n)            -> dense accumulation (assembly)
    csr_matvec(indptr, indices, data, x) -> y = A x
    pcg(indptr, indices, data, b, x0, dinv, tol, maxit) -> (x, iters, relres)
"""
import os
from types import SimpleNamespace

import numpy as np
import scipy.sparse as sp

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_DISABLED = os.environ.get("GPEBOUND_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")


# --- numpy reference path -------------------------------------------------

def _np_scatter_add(pos, vals, n):
    return np.bincount(pos, weights=vals, minlength=n)


def _np_csr_matvec(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, x.shape[0])) @ x


def _np_pcg(indptr, indices, data, b, x0, dinv, tol, maxit):
    n = b.shape[0]
    A = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    bnorm = np.sqrt(b @ b)
    x = x0.copy()
    r = b - A @ x
    rnorm = np.sqrt(r @ r)
    if rnorm <= tol * bnorm:
        return x, 0, rnorm / bnorm
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxit + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.sqrt(r @ r)
        if rnorm <= tol * bnorm:
            return x, it, rnorm / bnorm
        z = dinv * r
        rz_new = r @ z
        p *= rz_new / rz
        p += z
        rz = rz_new
    return x, maxit, rnorm / bnorm


numpy_backend = SimpleNamespace(
    name="numpy",
    scatter_add=_np_scatter_add,
    csr_matvec=_np_csr_matvec,
    pcg=_np_pcg,
)


# --- numba path -----------------------------------------------------------

def _make_numba_backend():
    njit = numba.njit(cache=True, fastmath=False)

    @njit
    def scatter_add(pos, vals, n):
        out = np.zeros(n)
        for k in range(pos.shape[0]):
            out[pos[k]] += vals[k]
        return out

    @njit
    def _matvec_into(indptr, indices, data, x, y):
        for i in range(indptr.shape[0] - 1):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += data[k] * x[indices[k]]
            y[i] = s

    @njit
    def csr_matvec(indptr, indices, data, x):
        y = np.empty(indptr.shape[0] - 1)
        _matvec_into(indptr, indices, data, x, y)
        return y

    # fastmath only on reductions so they vectorize like BLAS dots
    @numba.njit(cache=True, fastmath=True)
    def _dot(a, b):
        s = 0.0
        for i in range(a.shape[0]):
            s += a[i] * b[i]
        return s

    @njit
    def pcg(indptr, indices, data, b, x0, dinv, tol, maxit):
        n = b.shape[0]
        bnorm = np.sqrt(_dot(b, b))
        x = x0.copy()
        r = np.empty(n)
        z = np.empty(n)
        Ap = np.empty(n)
        _matvec_into(indptr, indices, data, x, Ap)
        for i in range(n):
            r[i] = b[i] - Ap[i]
        rnorm = np.sqrt(_dot(r, r))
        if rnorm <= tol * bnorm:
            return x, 0, rnorm / bnorm
        for i in range(n):
            z[i] = dinv[i] * r[i]
        p = z.copy()
        rz = _dot(r, z)
        for it in range(1, maxit + 1):
            _matvec_into(indptr, indices, data, p, Ap)
            alpha = rz / _dot(p, Ap)
            for i in range(n):
                x[i] += alpha * p[i]
                r[i] -= alpha * Ap[i]
                z[i] = dinv[i] * r[i]
            rnorm = np.sqrt(_dot(r, r))
            if rnorm <= tol * bnorm:
                return x, it, rnorm / bnorm
            rz_new = _dot(r, z)
            beta = rz_new / rz
            for i in range(n):
                p[i] = z[i] + beta * p[i]
            rz = rz_new
        return x, maxit, rnorm / bnorm

    return SimpleNamespace(
        name="numba",
        scatter_add=scatter_add,
        csr_matvec=csr_matvec,
        pcg=pcg,
    )


numba_backend = _make_numba_backend() if numba is not None else None

if numba_backend is not None and not _DISABLED:
    backend = numba_backend
else:
    backend = numpy_backend


def get_backend(name=None):
    """Return a kernel namespace by name (``"numba"``/``"numpy"``), or the active one."""
    if name is None:
        return backend
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if numba_backend is None:
            raise RuntimeError("numba is not installed")
        return numba_backend
    raise ValueError(f"unknown backend {name!r}")
