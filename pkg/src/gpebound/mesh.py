"""Conforming triangulations of the unit square and the L-shape.

Triangles are stored counterclockwise with local vertex 0 opposite the
refinement edge used by newest-vertex bisection; local edge ``k`` is the edge
opposite local vertex ``k``.  Global edges are stored as ``(lo, hi)`` vertex
pairs, and the global edge normal is the counterclockwise rotation of
``x[hi] - x[lo]``.  All Raviart-Thomas sign conventions derive from this.

Meshes are immutable.  Refinement returns a new mesh holding a reference to
its parent so that nested meshes can be prolonged onto each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np


class DomainPreset(str, Enum):
    UNIT_SQUARE = "unit_square"
    L_SHAPE = "l_shape"

    @property
    def area(self):
        return 1.0 if self is DomainPreset.UNIT_SQUARE else 3.0


class MeshError(ValueError):
    pass


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class TriangleMesh:
    """Triangle mesh with edge topology and one-step refinement lineage.

    Parameters
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array, counterclockwise
    level : int
        Refinement generation count (0 for an initial mesh).
    parent : (T,) int array, optional
        Index of the parent triangle in ``parent_mesh`` for each triangle.
    parent_mesh : TriangleMesh, optional
    """

    def __init__(self, vertices, triangles, level=0, parent=None, parent_mesh=None):
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise MeshError("triangle references a vertex out of range")
        self.vertices = _readonly(vertices)
        self.triangles = _readonly(triangles)
        self.level = int(level)
        self.parent = None if parent is None else _readonly(np.asarray(parent, dtype=np.int64))
        self.parent_mesh = parent_mesh
        self._build_topology()

    def _build_topology(self):
        t = self.triangles
        local = np.stack([t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=1)  # (T,3,2)
        flat = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(flat, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        tri_edges = inverse.reshape(-1, 3)
        counts = np.bincount(inverse, minlength=len(edges))
        if np.any(counts > 2):
            raise MeshError("non-manifold edge: more than two incident triangles")
        edge_tris = -np.ones((len(edges), 2), dtype=np.int64)
        order = np.argsort(inverse, kind="stable")
        owner = order // 3
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        edge_tris[:, 0] = owner[starts]
        two = counts == 2
        edge_tris[two, 1] = owner[starts[two] + 1]
        self.edges = _readonly(edges)
        self.tri_edges = _readonly(tri_edges)
        self.edge_tris = _readonly(edge_tris)
        self.boundary_edges = _readonly(counts == 1)

    # --- sizes --------------------------------------------------------------
    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    # --- geometry -----------------------------------------------------------
    @cached_property
    def signed_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return _readonly(0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))

    @property
    def areas(self):
        return self.signed_areas

    @cached_property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return _readonly(np.hypot(d[:, 0], d[:, 1]))

    @cached_property
    def edge_normals(self):
        """Unit normals: counterclockwise rotation of the lo->hi direction."""
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        d = d / self.edge_lengths[:, None]
        return _readonly(np.column_stack([-d[:, 1], d[:, 0]]))

    @cached_property
    def diameters(self):
        return _readonly(self.edge_lengths[self.tri_edges].max(axis=1))

    @cached_property
    def centroids(self):
        return _readonly(self.vertices[self.triangles].mean(axis=1))

    @cached_property
    def barycentric_gradients(self):
        """(T, 3, 2) gradients of the barycentric coordinates (P1 hat functions)."""
        p = self.vertices[self.triangles]
        a2 = 2.0 * self.signed_areas
        g = np.empty((self.n_triangles, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            g[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / a2
            g[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / a2
        return _readonly(g)

    @cached_property
    def boundary_vertices(self):
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.edges[self.boundary_edges].ravel()] = True
        return _readonly(mask)

    @cached_property
    def edge_sign(self):
        """(T, 3) +1 where the global normal of local edge k points out of the triangle."""
        t = self.triangles
        # local edge k runs from t[k+1] to t[k+2] counterclockwise; outward normal is its
        # clockwise rotation, so the global (lo->hi, ccw-rotated) normal is outward iff lo->hi
        # runs against the counterclockwise traversal.
        a = np.stack([t[:, 1], t[:, 2], t[:, 0]], axis=1)
        b = np.stack([t[:, 2], t[:, 0], t[:, 1]], axis=1)
        return _readonly(np.where(a > b, 1.0, -1.0))

    def min_angle(self):
        p = self.vertices[self.triangles]
        angles = []
        for i in range(3):
            u = p[:, (i + 1) % 3] - p[:, i]
            v = p[:, (i + 2) % 3] - p[:, i]
            c = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.arccos(np.clip(c, -1.0, 1.0)))
        return float(np.min(angles))

    # --- checks -------------------------------------------------------------
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_triangles

    def check(self):
        """Raise :class:`MeshError` if a structural invariant is violated."""
        if np.any(self.signed_areas <= 0):
            raise MeshError("triangle with non-positive signed area")
        if self.euler_characteristic() != 1:
            raise MeshError(f"Euler characteristic {self.euler_characteristic()} != 1")
        if len(np.unique(self.vertices, axis=0)) != self.n_vertices:
            raise MeshError("duplicate vertex coordinates")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.ravel()] = True
        if not used.all():
            raise MeshError("unreferenced vertex")
        return self

    def ancestors_in(self, coarse):
        """Map every triangle of ``self`` to its ancestor triangle in ``coarse``.

        Raises :class:`MeshError` if ``coarse`` is not in the refinement chain.
        """
        anc = np.arange(self.n_triangles)
        m = self
        while m is not coarse:
            if m.parent_mesh is None:
                raise MeshError("meshes are not nested")
            anc = m.parent[anc]
            m = m.parent_mesh
        return anc

    def __repr__(self):
        return (f"TriangleMesh(V={self.n_vertices}, T={self.n_triangles}, "
                f"E={self.n_edges}, level={self.level})")


def mesh_size(mesh):
    """Maximum element diameter (longest edge)."""
    return float(mesh.diameters.max())


def _label_longest_edge(vertices, triangles):
    """Rotate each triangle cyclically so local vertex 0 faces its longest edge."""
    p = vertices[triangles]
    lengths = np.stack([
        np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
        np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
    ], axis=1)
    k = np.argmax(lengths, axis=1)
    idx = (k[:, None] + np.arange(3)[None, :]) % 3
    return np.take_along_axis(triangles, idx, axis=1)


def _grid_triangles(nx, ny, keep_cell=None):
    vid = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    tris = []
    for j in range(ny):
        for i in range(nx):
            if keep_cell is not None and not keep_cell(i, j):
                continue
            v00, v10 = vid[j, i], vid[j, i + 1]
            v01, v11 = vid[j + 1, i], vid[j + 1, i + 1]
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return np.array(tris, dtype=np.int64)


def unit_square_mesh(n):
    """Structured mesh of (0,1)^2 with each cell split along the (0,0)-(1,1) diagonal."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    tris = _label_longest_edge(vertices, _grid_triangles(n, n))
    return TriangleMesh(vertices, tris)


def l_shape_mesh(n):
    """Structured mesh of (-1,1)^2 minus [0,1)x(-1,0] with ``n`` cells per unit length."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    x = np.linspace(-1.0, 1.0, 2 * n + 1)
    X, Y = np.meshgrid(x, x)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    # cell (i, j) covers [x_i, x_i+1] x [y_j, y_j+1]; drop the lower-right quadrant
    tris = _grid_triangles(2 * n, 2 * n, keep_cell=lambda i, j: not (i >= n and j < n))
    used = np.unique(tris)
    remap = -np.ones(len(vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    vertices = vertices[used]
    tris = _label_longest_edge(vertices, remap[tris])
    return TriangleMesh(vertices, tris)


def domain_mesh(domain, n):
    domain = DomainPreset(domain)
    if domain is DomainPreset.UNIT_SQUARE:
        return unit_square_mesh(n)
    return l_shape_mesh(n)


def refine_red(mesh):
    """Regular refinement: split every triangle into four similar children."""
    V = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, mids])
    t = mesh.triangles
    m = V + mesh.tri_edges  # m[:, k] is the midpoint of the edge opposite vertex k
    m12, m20, m01 = m[:, 0], m[:, 1], m[:, 2]
    children = np.stack([
        np.column_stack([t[:, 0], m01, m20]),
        np.column_stack([m01, t[:, 1], m12]),
        np.column_stack([m20, m12, t[:, 2]]),
        np.column_stack([m12, m20, m01]),
    ], axis=1).reshape(-1, 3)
    parent = np.repeat(np.arange(mesh.n_triangles), 4)
    return TriangleMesh(vertices, children, level=mesh.level + 1, parent=parent, parent_mesh=mesh)


def refine_bisect(mesh, marked):
    """Newest-vertex bisection of ``marked`` triangles plus conforming closure."""
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked,
                                  dtype=np.int64))
    if marked.size and (marked.min() < 0 or marked.max() >= mesh.n_triangles):
        raise IndexError("marked triangle index out of range")
    if marked.size == 0:
        return mesh

    te = mesh.tri_edges
    edge_marked = np.zeros(mesh.n_edges, dtype=bool)
    edge_marked[te[marked, 0]] = True
    while True:
        need = edge_marked[te].any(axis=1) & ~edge_marked[te[:, 0]]
        if not need.any():
            break
        edge_marked[te[need, 0]] = True

    V = mesh.n_vertices
    midpoint = -np.ones(mesh.n_edges, dtype=np.int64)
    midpoint[edge_marked] = V + np.arange(edge_marked.sum())
    e = mesh.edges[edge_marked]
    vertices = np.vstack([mesh.vertices, 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])])

    t = mesh.triangles
    bis = edge_marked[te[:, 0]]
    keep = ~bis
    out_tris = [t[keep]]
    out_parent = [np.nonzero(keep)[0]]

    tb = t[bis]
    pb = np.nonzero(bis)[0]
    m = midpoint[te[bis, 0]]
    # children (m, v0, v1) and (m, v2, v0); their refinement edges are (v0,v1) and (v2,v0)
    for child, ref_edge in (
        (np.column_stack([m, tb[:, 0], tb[:, 1]]), te[bis, 2]),
        (np.column_stack([m, tb[:, 2], tb[:, 0]]), te[bis, 1]),
    ):
        again = edge_marked[ref_edge]
        out_tris.append(child[~again])
        out_parent.append(pb[~again])
        c = child[again]
        mm = midpoint[ref_edge[again]]
        out_tris.append(np.column_stack([mm, c[:, 0], c[:, 1]]))
        out_tris.append(np.column_stack([mm, c[:, 2], c[:, 0]]))
        out_parent.append(pb[again])
        out_parent.append(pb[again])

    tris = np.vstack(out_tris)
    parent = np.concatenate(out_parent)
    order = np.argsort(parent, kind="stable")
    return TriangleMesh(vertices, tris[order], level=mesh.level + 1,
                        parent=parent[order], parent_mesh=mesh)


# --- plain-text format ------------------------------------------------------

def write_mesh(mesh, path):
    with open(path, "w") as f:
        f.write(f"vertices {mesh.n_vertices} triangles {mesh.n_triangles}\n")
        for x, y in mesh.vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        for i, j, k in mesh.triangles:
            f.write(f"{i} {j} {k}\n")


def read_mesh(path):
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 4 or header[0] != "vertices" or header[2] != "triangles":
            raise MeshError(f"bad mesh header: {' '.join(header)!r}")
        nv, nt = int(header[1]), int(header[3])
        rows = [f.readline().split() for _ in range(nv + nt)]
    if any(len(r) == 0 for r in rows):
        raise MeshError("truncated mesh file")
    vertices = np.array([[float(a) for a in r] for r in rows[:nv]])
    tris = np.array([[int(a) for a in r] for r in rows[nv:]], dtype=np.int64)
    return TriangleMesh(vertices, tris)
