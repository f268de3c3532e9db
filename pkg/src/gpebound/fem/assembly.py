"""Sparse assembly from element-local matrices with a precomputed CSR pattern."""
import numpy as np
import scipy.sparse as sp

from .. import _kernels


class Assembler:
    """Scatter element matrices into a fixed CSR sparsity pattern.

    Parameters
    ----------
    conn : (T, nl) int array
        Global dof of each local basis function.  Entries equal to -1 are
        dropped, which is how Dirichlet restriction is applied.
    ndof : int
    """

    def __init__(self, conn, ndof):
        conn = np.asarray(conn, dtype=np.int64)
        nl = conn.shape[1]
        rows = np.repeat(conn, nl, axis=1).ravel()
        cols = np.tile(conn, (1, nl)).ravel()
        valid = (rows >= 0) & (cols >= 0)
        keys = rows[valid] * ndof + cols[valid]
        ukeys, pos = np.unique(keys, return_inverse=True)
        r = ukeys // ndof
        self.indices = (ukeys % ndof).astype(np.int32)
        self.indptr = np.searchsorted(r, np.arange(ndof + 1)).astype(np.int32)
        self.valid = valid
        self.pos = pos.reshape(-1).astype(np.int64)
        self.ndof = int(ndof)
        self.nnz = len(ukeys)

    def assemble(self, local, kernels=None):
        """Sum ``local`` (T, nl, nl) into a ``scipy.sparse.csr_matrix``."""
        k = kernels or _kernels.backend
        vals = np.ascontiguousarray(local, dtype=float).reshape(-1)[self.valid]
        data = k.scatter_add(self.pos, vals, self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()),
                             shape=(self.ndof, self.ndof))

    def assemble_vector(self, local, conn):
        """Sum element vectors (T, nl) into a dense vector using ``conn``."""
        conn = np.asarray(conn).ravel()
        v = np.asarray(local, dtype=float).ravel()
        keep = conn >= 0
        return np.bincount(conn[keep], weights=v[keep], minlength=self.ndof)


def write_coo(matrix, path):
    """Dump a sparse matrix as ``i j value`` lines for debugging."""
    A = sp.coo_matrix(matrix)
    with open(path, "w") as f:
        for i, j, v in zip(A.row, A.col, A.data):
            f.write(f"{i} {j} {v:.17g}\n")
