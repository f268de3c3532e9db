"""Raviart-Thomas spaces RT0 and RT1 on triangles.

The local basis on each triangle is obtained by inverting the dof matrix of
a monomial basis written in centred, diameter-scaled coordinates
``X = (x - c_K) / h_K``.  Degrees of freedom are

* edge moments ``int_E (psi . nu_E) q ds`` with ``q = 1`` (RT0) or
  ``q in {1, 2s - 1}`` (RT1), ``s`` running 0 -> 1 from the lower- to the
  higher-numbered vertex and ``nu_E`` the global edge normal;
* for RT1, interior means ``|K|^-1 int_K psi_x`` and ``|K|^-1 int_K psi_y``.

Because edge moments use the global orientation, two triangles sharing an
edge see identical normal traces and no sign bookkeeping is needed.
"""
from functools import cached_property

import numpy as np

from .assembly import Assembler
from .quadrature import DEFAULT_DEGREE, gauss_line, physical_weights, quadrature


def _monomials(order, X):
    """Vector monomials and their (scaled) divergence at points ``X`` (..., 2)."""
    x, y = X[..., 0], X[..., 1]
    one, zero = np.ones_like(x), np.zeros_like(x)
    if order == 0:
        vals = [(one, zero), (zero, one), (x, y)]
        divs = [zero, zero, 2.0 * one]
    else:
        vals = [(one, zero), (x, zero), (y, zero), (zero, one), (zero, x), (zero, y),
                (x * x, x * y), (x * y, y * y)]
        divs = [zero, one, zero, zero, zero, one, 3.0 * x, 3.0 * y]
    v = np.stack([np.stack(c, axis=-1) for c in vals], axis=-2)
    d = np.stack(divs, axis=-1)
    return v, d


class RTSpace:
    """Raviart-Thomas space of order 0 or 1 with free normal trace on the boundary."""

    def __init__(self, mesh, order=1):
        if order not in (0, 1):
            raise ValueError("RT order must be 0 or 1")
        self.mesh = mesh
        self.order = order
        self.nb = 3 if order == 0 else 8
        self.edge_moments = 1 if order == 0 else 2
        self.ndof = mesh.n_edges * self.edge_moments + (0 if order == 0 else 2 * mesh.n_triangles)
        self._centers = mesh.centroids
        self._scale = mesh.diameters
        self._coef = np.linalg.inv(self._dof_matrix())

    @cached_property
    def l2g(self):
        te = self.mesh.tri_edges
        if self.order == 0:
            return np.ascontiguousarray(te)
        T, E = self.mesh.n_triangles, self.mesh.n_edges
        cols = [2 * te[:, 0], 2 * te[:, 0] + 1, 2 * te[:, 1], 2 * te[:, 1] + 1,
                2 * te[:, 2], 2 * te[:, 2] + 1,
                2 * E + 2 * np.arange(T), 2 * E + 2 * np.arange(T) + 1]
        return np.column_stack(cols)

    @cached_property
    def assembler(self):
        return Assembler(self.l2g, self.ndof)

    # --- local basis ---------------------------------------------------------
    def _scaled(self, elements, xy):
        return (xy - self._centers[elements]) / self._scale[elements][..., None]

    def _edge_points(self):
        """Gauss points on every edge: (E, ng, 2) coordinates, weights (ng,), params (ng,)."""
        s, w = gauss_line(3)
        m = self.mesh
        a = m.vertices[m.edges[:, 0]]
        b = m.vertices[m.edges[:, 1]]
        pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
        return pts, w, s

    def _edge_tests(self, s):
        if self.order == 0:
            return np.ones((1, len(s)))
        return np.vstack([np.ones_like(s), 2.0 * s - 1.0])

    def _dof_matrix(self):
        m = self.mesh
        T = m.n_triangles
        pts, w, s = self._edge_points()
        tests = self._edge_tests(s)  # (nmom, ng)
        nm = self.nb
        D = np.empty((T, self.nb, nm))
        for k in range(3):
            e = m.tri_edges[:, k]
            X = self._scaled(np.arange(T)[:, None], pts[e])  # (T, ng, 2)
            v, _ = _monomials(self.order, X)  # (T, ng, nm, 2)
            vn = np.einsum("tgjd,td->tgj", v, m.edge_normals[e])
            mom = np.einsum("qg,g,tgj->tqj", tests, w, vn) * m.edge_lengths[e][:, None, None]
            D[:, self.edge_moments * k:self.edge_moments * (k + 1), :] = mom
        if self.order == 1:
            rule = quadrature(2)
            xq = np.einsum("qi,tid->tqd", rule.points, m.vertices[m.triangles])
            v, _ = _monomials(1, self._scaled(np.arange(T)[:, None], xq))
            D[:, 6:8, :] = 2.0 * np.einsum("q,tqjd->tdj", rule.weights, v)
        return D

    def basis_at(self, bary):
        """Basis values (T, nb, 2) and divergences (T, nb) at one barycentric point."""
        m = self.mesh
        xy = np.asarray(bary) @ m.vertices[m.triangles]  # (T, 2)
        v, d = _monomials(self.order, self._scaled(np.arange(m.n_triangles), xy))
        vals = np.einsum("tjd,tjk->tkd", v, self._coef)
        divs = np.einsum("tj,tjk->tk", d, self._coef) / self._scale[:, None]
        return vals, divs

    def evaluate(self, coeffs, elements, xy):
        """Field values (N, 2) and divergence (N,) at physical points inside ``elements``."""
        elements = np.asarray(elements)
        if np.any(elements < 0) or np.any(elements >= self.mesh.n_triangles):
            raise IndexError("element index out of range")
        v, d = _monomials(self.order, self._scaled(elements, xy))
        c = np.einsum("njk,nk->nj", self._coef[elements], coeffs[self.l2g[elements]])
        return np.einsum("njd,nj->nd", v, c), np.einsum("nj,nj->n", d, c) / self._scale[elements]

    def interpolate(self, field):
        """RT interpolant (global dofs) of ``field(elements, xy) -> (N, 2)``."""
        m = self.mesh
        pts, w, s = self._edge_points()
        E, ng = pts.shape[:2]
        owner = np.repeat(m.edge_tris[:, 0], ng)
        vals = np.asarray(field(owner, pts.reshape(-1, 2))).reshape(E, ng, 2)
        vn = np.einsum("egd,ed->eg", vals, m.edge_normals)
        mom = np.einsum("qg,g,eg->eq", self._edge_tests(s), w, vn) * m.edge_lengths[:, None]
        if self.order == 0:
            return mom[:, 0].copy()
        rule = quadrature(2)
        T = m.n_triangles
        xq = np.einsum("qi,tid->tqd", rule.points, m.vertices[m.triangles])
        fv = np.asarray(field(np.repeat(np.arange(T), len(rule)), xq.reshape(-1, 2))).reshape(T, len(rule), 2)
        interior = 2.0 * np.einsum("q,tqd->td", rule.weights, fv)
        return np.concatenate([mom.ravel(), interior.ravel()])


def assemble_rt_system(mesh, order=1, space=None):
    """Matrix of a*(p, q) = int div p div q + p . q on the RT space."""
    space = space or RTSpace(mesh, order)
    rule = quadrature(2 * space.order + 2)
    wq = physical_weights(mesh, rule)
    local = np.zeros((mesh.n_triangles, space.nb, space.nb))
    for q in range(len(rule)):
        v, d = space.basis_at(rule.points[q])
        local += wq[:, q, None, None] * (np.einsum("tid,tjd->tij", v, v) + d[:, :, None] * d[:, None, :])
    return space.assembler.assemble(local)


def rt_div_load(space, g, rule):
    """Vector of int g div psi_j with ``g`` sampled (T, nq) at the points of ``rule``."""
    mesh = space.mesh
    wq = physical_weights(mesh, rule)
    local = np.zeros((mesh.n_triangles, space.nb))
    for q in range(len(rule)):
        _, d = space.basis_at(rule.points[q])
        local += (wq[:, q] * g[:, q])[:, None] * d
    return np.bincount(space.l2g.ravel(), weights=local.ravel(), minlength=space.ndof)


def assemble_rt_rhs(state, rt, rule=None):
    """Right-hand side F*(psi_j) = -int (lambda_h u_h - zeta u_h^3 - (W - 1) u_h) div psi_j."""
    if state.mesh is not rt.mesh:
        raise ValueError("state and RT space live on different meshes")
    rule = rule or quadrature(DEFAULT_DEGREE)
    g = state.dual_source(rule)
    return -rt_div_load(rt, g, rule)


def green_pairings(space, rule=None):
    """Green form ``(div psi_i, phi_j) + (psi_i, grad phi_j)`` for all RT x interior P1 pairs.

    Returns ``(G, scale)``, both dense (ndof_rt, n_interior); ``scale`` holds
    ``||div psi_i|| ||phi_j|| + ||psi_i|| ||grad phi_j||``.  Exact arithmetic
    gives ``G = 0`` because the hats vanish on the boundary.
    """
    mesh = space.mesh
    rule = rule or quadrature(space.order + 2)
    wq = physical_weights(mesh, rule)
    tri = mesh.triangles
    gl = mesh.barycentric_gradients  # (T, 3, 2)
    T = mesh.n_triangles
    local = np.zeros((T, space.nb, 3))
    div2 = np.zeros((T, space.nb))
    val2 = np.zeros((T, space.nb))
    for q in range(len(rule)):
        v, d = space.basis_at(rule.points[q])
        lam = rule.points[q]
        local += wq[:, q, None, None] * (d[:, :, None] * lam[None, None, :]
                                         + np.einsum("tid,tjd->tij", v, gl))
        div2 += wq[:, q, None] * d * d
        val2 += wq[:, q, None] * np.sum(v * v, axis=2)
    rows = np.repeat(space.l2g, 3, axis=1).ravel()
    cols = np.tile(tri, (1, space.nb)).ravel()
    G = np.zeros((space.ndof, mesh.n_vertices))
    np.add.at(G, (rows, cols), local.ravel())
    nd = np.sqrt(np.bincount(space.l2g.ravel(), weights=div2.ravel(), minlength=space.ndof))
    nv = np.sqrt(np.bincount(space.l2g.ravel(), weights=val2.ravel(), minlength=space.ndof))
    # hat norms: ||phi||^2 = sum |K|/6, ||grad phi||^2 = sum |K| |grad lambda|^2
    m0 = np.sqrt(np.bincount(tri.ravel(), weights=np.repeat(mesh.areas / 6.0, 3), minlength=mesh.n_vertices))
    g2 = mesh.areas[:, None] * np.sum(gl * gl, axis=2)
    m1 = np.sqrt(np.bincount(tri.ravel(), weights=g2.ravel(), minlength=mesh.n_vertices))
    inner = np.nonzero(~mesh.boundary_vertices)[0]
    scale = np.outer(nd, m0[inner]) + np.outer(nv, m1[inner])
    return G[:, inner], scale


def eval_rt(f, element, points):
    """Field values of RT function ``f`` on ``element`` at reference points (nq, 2)."""
    sp_ = f.space
    pts = np.atleast_2d(points)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    element = np.asarray(element)
    if np.any(element < 0) or np.any(element >= sp_.mesh.n_triangles):
        raise IndexError("element index out of range")
    xy = bary @ sp_.mesh.vertices[sp_.mesh.triangles[element]]
    return sp_.evaluate(f.coeffs, np.full(len(xy), element), xy)[0]


def div_rt(f, element, points):
    """Divergence of RT function ``f`` on ``element`` at reference points (nq, 2)."""
    sp_ = f.space
    pts = np.atleast_2d(points)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    element = np.asarray(element)
    if np.any(element < 0) or np.any(element >= sp_.mesh.n_triangles):
        raise IndexError("element index out of range")
    xy = bary @ sp_.mesh.vertices[sp_.mesh.triangles[element]]
    return sp_.evaluate(f.coeffs, np.full(len(xy), element), xy)[1]
