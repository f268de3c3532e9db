"""Continuous piecewise-linear Lagrange space with homogeneous Dirichlet data."""
from functools import cached_property

import numpy as np

from .assembly import Assembler
from .quadrature import DEFAULT_DEGREE, physical_points, physical_weights, quadrature


class P1Space:
    """P1 Lagrange space on ``mesh``; one dof per vertex."""

    def __init__(self, mesh):
        self.mesh = mesh

    @property
    def ndof(self):
        return self.mesh.n_vertices

    @cached_property
    def interior_dofs(self):
        return np.nonzero(~self.mesh.boundary_vertices)[0]

    @cached_property
    def assembler(self):
        return Assembler(self.mesh.triangles, self.ndof)

    @cached_property
    def interior_assembler(self):
        """Assembler writing directly into the Dirichlet-restricted pattern."""
        remap = -np.ones(self.ndof, dtype=np.int64)
        remap[self.interior_dofs] = np.arange(len(self.interior_dofs))
        return Assembler(remap[self.mesh.triangles], len(self.interior_dofs))

    def extend(self, interior_values):
        """Embed interior coefficients into a full vector with zero boundary values."""
        full = np.zeros(self.ndof)
        full[self.interior_dofs] = interior_values
        return full


class FeFunction:
    """Coefficient vector on a P1 or RT space."""

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.ndof,):
            raise ValueError(f"expected {space.ndof} coefficients, got {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs


# --- element matrices ---------------------------------------------------------

def local_stiffness(mesh):
    g = mesh.barycentric_gradients
    return mesh.areas[:, None, None] * np.einsum("tid,tjd->tij", g, g)


def local_mass(mesh):
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return mesh.areas[:, None, None] * base[None]


def local_weighted_mass(mesh, w, rule):
    """Element matrices of int w phi_i phi_j with ``w`` sampled at (T, nq) points."""
    w = np.asarray(w, dtype=float)
    if w.shape != (mesh.n_triangles, len(rule)):
        raise ValueError(f"weight samples must have shape {(mesh.n_triangles, len(rule))}, got {w.shape}")
    B = rule.points
    outer = (B[:, :, None] * B[:, None, :]).reshape(len(rule), 9)
    return ((w * physical_weights(mesh, rule)) @ outer).reshape(-1, 3, 3)


def harmonic_potential(x, gamma):
    return gamma[0] * x[..., 0] ** 2 + gamma[1] * x[..., 1] ** 2


def local_potential(mesh, gamma, rule=None):
    rule = rule or quadrature(DEFAULT_DEGREE)
    W = harmonic_potential(physical_points(mesh, rule), gamma)
    return local_weighted_mass(mesh, W, rule)


def assemble_p1(mesh, which, gamma=None, w=None, rule=None, space=None):
    """Assemble a P1 form over all vertex dofs.

    ``which`` is one of ``"stiffness"``, ``"mass"``, ``"potential"`` (needs
    ``gamma``) or ``"weighted_mass"`` (needs samples ``w`` at the points of
    ``rule``, degree 8 by default).
    """
    space = space or P1Space(mesh)
    rule = rule or quadrature(DEFAULT_DEGREE)
    if which == "stiffness":
        local = local_stiffness(mesh)
    elif which == "mass":
        local = local_mass(mesh)
    elif which == "potential":
        if gamma is None or min(gamma) <= 0:
            raise ValueError("potential needs gamma with positive components")
        local = local_potential(mesh, gamma, rule)
    elif which == "weighted_mass":
        if w is None:
            raise ValueError("weighted_mass needs quadrature-point samples w")
        local = local_weighted_mass(mesh, w, rule)
    else:
        raise ValueError(f"unknown form {which!r}")
    return space.assembler.assemble(local)


def restrict_dirichlet(matrix, space):
    """Principal submatrix on the interior (non-boundary) vertices."""
    if matrix.shape != (space.ndof, space.ndof):
        raise ValueError("matrix dimension does not match the space")
    idx = space.interior_dofs
    return matrix.tocsr()[idx][:, idx]


# --- evaluation -------------------------------------------------------------

def _check_element(mesh, element):
    element = np.asarray(element)
    if np.any(element < 0) or np.any(element >= mesh.n_triangles):
        raise IndexError("element index out of range")
    return element


def eval_p1(f, element, points):
    """Values of ``f`` on ``element`` at reference points (nq, 2)."""
    mesh = f.space.mesh
    element = _check_element(mesh, element)
    pts = np.atleast_2d(points)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    return bary @ f.coeffs[mesh.triangles[element]]


def grad_p1(f, element):
    """Constant gradient of ``f`` on ``element``."""
    mesh = f.space.mesh
    element = _check_element(mesh, element)
    return np.einsum("...i,...id->...d", f.coeffs[mesh.triangles[element]],
                     mesh.barycentric_gradients[element])


def values_at_quadrature(mesh, coeffs, rule):
    """(T, nq) values of a P1 coefficient vector at the points of ``rule``."""
    return coeffs[mesh.triangles] @ rule.points.T


def gradients(mesh, coeffs):
    """(T, 2) elementwise gradients of a P1 coefficient vector."""
    return np.einsum("ti,tid->td", coeffs[mesh.triangles], mesh.barycentric_gradients)


def prolong(coarse_mesh, fine_mesh, coeffs):
    """Interpolate a P1 function from ``coarse_mesh`` onto a nested ``fine_mesh``."""
    anc = fine_mesh.ancestors_in(coarse_mesh)
    tv = coarse_mesh.triangles[anc]  # (Tf, 3) coarse vertices of the ancestor
    g = coarse_mesh.barycentric_gradients[anc]
    x0 = coarse_mesh.vertices[tv[:, 0]]
    fine_pts = fine_mesh.vertices[fine_mesh.triangles]  # (Tf, 3, 2)
    lam12 = np.einsum("tkd,tid->tki", fine_pts - x0[:, None, :], g[:, 1:, :])
    bary = np.concatenate([1.0 - lam12.sum(axis=2, keepdims=True), lam12], axis=2)
    vals = np.einsum("tki,ti->tk", bary, coeffs[tv])
    out = np.empty(fine_mesh.n_vertices)
    out[fine_mesh.triangles.ravel()] = vals.ravel()
    return out
