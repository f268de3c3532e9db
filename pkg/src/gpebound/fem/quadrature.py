"""Triangle quadrature via the collapsed (Stroud conical) Gauss product.

Every rule has strictly positive weights summing to 1/2, the area of the
reference triangle {x, y >= 0, x + y <= 1}.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 8
DEFAULT_DEGREE = 8


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,) reference-triangle weights
    exact_degree: int

    @property
    def ref_points(self):
        """(nq, 2) reference coordinates (x, y) = (lambda_1, lambda_2)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def quadrature(degree=DEFAULT_DEGREE):
    """Rule integrating all polynomials of total degree <= ``degree`` exactly."""
    if int(degree) != degree or not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"quadrature degree must be an integer in [1, {MAX_DEGREE}]")
    m = (int(degree) + 2) // 2
    # x along a Gauss-Jacobi(1, 0) rule absorbs the (1 - x) Jacobian of the collapse
    tj, wj = roots_jacobi(m, 1.0, 0.0)
    tl, wl = roots_legendre(m)
    x = 0.5 * (1.0 + tj)
    s = 0.5 * (1.0 + tl)
    X, S = np.meshgrid(x, s, indexing="ij")
    Y = S * (1.0 - X)
    W = np.outer(wj / 4.0, wl / 2.0)
    pts = np.column_stack([1.0 - X.ravel() - Y.ravel(), X.ravel(), Y.ravel()])
    w = W.ravel()
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(pts, w, int(2 * m - 1))


@lru_cache(maxsize=None)
def gauss_line(n):
    """Gauss-Legendre points on [0, 1] and weights summing to 1."""
    t, w = roots_legendre(n)
    return 0.5 * (1.0 + t), 0.5 * w


def physical_points(mesh, rule):
    """(T, nq, 2) quadrature points mapped onto every triangle."""
    return np.einsum("qi,tid->tqd", rule.points, mesh.vertices[mesh.triangles])


def physical_weights(mesh, rule):
    """(T, nq) weights including the Jacobian 2|K|."""
    return 2.0 * mesh.areas[:, None] * rule.weights[None, :]
