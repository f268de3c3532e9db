"""Flux reconstruction, complementarity estimator and asymptotic lower bounds.

For a discrete ground state ``(lambda_h, u_h)`` and any H(div) field ``p``

    eta(p)^2 = ||lambda_h u_h - W u_h - zeta u_h^3 + div p||^2 + ||p - grad u_h||^2.

The minimizer over an RT space solves the Galerkin problem for
``a*(p, q) = (div p, div q) + (p, q)`` with load
``F*(q) = -(lambda_h u_h - zeta u_h^3 - (W - 1) u_h, div q)``, and
``lambda_h - eta`` and ``E_h - eta`` are reported as lower bounds.
"""
from dataclasses import dataclass

import numpy as np

from .fem import quadrature
from .fem.p1 import gradients, local_mass, local_stiffness, prolong
from .fem.quadrature import DEFAULT_DEGREE, physical_points, physical_weights
from .fem.rt import RTSpace, assemble_rt_rhs, assemble_rt_system
from .linalg import SolveReport, cg_solve
from .mesh import MeshError

DUAL_TOL = 1e-12


@dataclass
class FluxField:
    rt_space: RTSpace
    coeffs: np.ndarray
    solve_report: SolveReport

    @property
    def order(self):
        return self.rt_space.order


@dataclass
class ErrorCertificate:
    eta: float
    term_residual: float
    term_flux: float
    per_element: np.ndarray  # (T, 2) squared residual / flux contributions
    lambda_L: float
    energy_L: float
    lambda_h: float
    energy_h: float
    rt_order: int


@dataclass
class ResidualIndicators:
    per_element: np.ndarray  # eta_h(K), not squared
    global_: float

    @property
    def squared(self):
        return self.per_element ** 2


def _system(space):
    A = getattr(space, "_system_matrix", None)
    if A is None:
        A = assemble_rt_system(space.mesh, space=space)
        space._system_matrix = A
    return A


def solve_dual(state, order=1, rt=None, tol=DUAL_TOL):
    """Galerkin approximation of the optimal flux in RT_order on the state's mesh."""
    rt = rt or RTSpace(state.mesh, order)
    A = _system(rt)
    F = assemble_rt_rhs(state, rt)
    x, report = cg_solve(A, F, tol=tol, maxit=50 * rt.ndof + 1000, precond="jacobi")
    return FluxField(rt, x, report)


def lower_bounds(lambda_h, energy_h, eta):
    """Asymptotic lower bounds ``(lambda_h - eta, E_h - eta)``."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    return lambda_h - eta, energy_h - eta


def estimator_terms(state, space, coeffs, rule=None):
    """(T, 2) elementwise squared residual and flux terms of eta for an RT field."""
    mesh = state.mesh
    if space.mesh is not mesh:
        raise ValueError("state and flux live on different meshes")
    rule = rule or quadrature(DEFAULT_DEGREE)
    wq = physical_weights(mesh, rule)
    g = state.residual_source(rule)
    grad = gradients(mesh, state.coeffs)
    c = coeffs[space.l2g]  # (T, nb)
    out = np.zeros((mesh.n_triangles, 2))
    for q in range(len(rule)):
        v, d = space.basis_at(rule.points[q])
        p = np.einsum("tkd,tk->td", v, c)
        divp = np.einsum("tk,tk->t", d, c)
        out[:, 0] += wq[:, q] * (g[:, q] + divp) ** 2
        out[:, 1] += wq[:, q] * np.sum((p - grad) ** 2, axis=1)
    return out


def eta(state, flux, rule=None):
    """Complementarity estimator of ``state`` for ``flux`` with lower bounds."""
    per = estimator_terms(state, flux.rt_space, flux.coeffs, rule)
    r2, f2 = per.sum(axis=0)
    value = float(np.sqrt(r2 + f2))
    lam_L, e_L = lower_bounds(state.lambda_h, state.energy_h, value)
    return ErrorCertificate(value, float(np.sqrt(r2)), float(np.sqrt(f2)), per,
                            lam_L, e_L, state.lambda_h, state.energy_h, flux.order)


def certify(state, order=1):
    flux = solve_dual(state, order)
    return eta(state, flux), flux


def embed(flux, target):
    """Coefficients of ``flux`` in the (larger or equal) RT space ``target``."""
    src = flux.rt_space
    if src.mesh is not target.mesh or src.order > target.order:
        raise ValueError("flux is not contained in the target RT space")
    if src.order == target.order:
        return flux.coeffs.copy()
    return target.interpolate(lambda el, xy: src.evaluate(flux.coeffs, el, xy)[0])


def pythagoras_gap(state, flux_a, flux_b):
    """Return ``(|||flux_a - flux_b|||_*, |eta^2(b) - eta^2(a) - gap^2|)``.

    ``flux_a`` should be the Galerkin flux; ``flux_b`` may live in the same
    space or in a lower-order RT space on the same mesh.
    """
    space = flux_a.rt_space
    b = embed(flux_b, space)
    delta = flux_a.coeffs - b
    gap2 = float(delta @ (_system(space) @ delta))
    eta_a2 = estimator_terms(state, space, flux_a.coeffs).sum()
    eta_b2 = estimator_terms(state, space, b).sum()
    return float(np.sqrt(max(gap2, 0.0))), float(abs(eta_b2 - eta_a2 - gap2))


# --- residual indicators for marking ---------------------------------------------

def jump_residuals(mesh, coeffs):
    """Normal gradient jump [[grad u]] . nu_E on every edge (zero on boundary edges)."""
    g = gradients(mesh, coeffs)
    J = np.zeros(mesh.n_edges)
    inner = ~mesh.boundary_edges
    t0, t1 = mesh.edge_tris[inner, 0], mesh.edge_tris[inner, 1]
    J[inner] = np.einsum("ed,ed->e", g[t1] - g[t0], mesh.edge_normals[inner])
    return J


def residual_indicators(state, rule=None):
    """Element indicators h_K^2 ||R_K||^2 + sum_E h_E ||J_E||^2 (edges split 50/50)."""
    mesh = state.mesh
    rule = rule or quadrature(DEFAULT_DEGREE)
    R = state.residual_source(rule)  # the Laplacian of a P1 function vanishes elementwise
    vol = mesh.diameters ** 2 * np.sum(physical_weights(mesh, rule) * R ** 2, axis=1)
    J = jump_residuals(mesh, state.coeffs)
    L = mesh.edge_lengths
    edge_term = L * L * J ** 2  # h_E ||J_E||_{0,E}^2 with J constant on E
    per2 = vol + 0.5 * edge_term[mesh.tri_edges].sum(axis=1)
    return ResidualIndicators(np.sqrt(per2), float(np.sqrt(per2.sum())))


# --- comparisons against a nested reference ----------------------------------------

def _a_norm2(mesh, coeffs):
    local = local_stiffness(mesh) + local_mass(mesh)
    c = coeffs[mesh.triangles]
    return float(np.einsum("ti,tij,tj->", c, local, c))


def _canonical(mesh, coeffs):
    return -coeffs if np.sum(coeffs[mesh.triangles].sum(axis=1) * mesh.areas) < 0 else coeffs


def _prolonged(state, ref_state):
    try:
        u_h = prolong(state.mesh, ref_state.mesh, state.coeffs)
    except MeshError as exc:
        raise ValueError("reference mesh is not a refinement of the state mesh") from exc
    return _canonical(ref_state.mesh, u_h), _canonical(ref_state.mesh, ref_state.coeffs)


def error_vs_reference(state, ref_state, eta=None):
    """``(||u_ref - u_h||_a, eta / err)`` on the nested reference mesh."""
    u_h, u_ref = _prolonged(state, ref_state)
    err = float(np.sqrt(_a_norm2(ref_state.mesh, u_ref - u_h)))
    eff = None
    if eta is not None:
        eff = eta / err if err > 0 else float("inf")
    return err, eff


def rq_expansion_check(state, ref_state, rule=None):
    """Compare ``lambda_h - lambda_ref`` with its expansion in ``e = u_h - u_ref``.

    The expansion, exact when ``(lambda_ref, u_ref)`` is a Galerkin eigenpair on
    a space containing ``u_h``, reads

        [a(e,e) - lambda b(e,e) + int (W-1) e^2
         + zeta int (u_h^3 + u_h^2 u + u_h u^2 - u^3) e] / b(u_h, u_h).

    Returns ``(lhs, rhs, |lhs - rhs|)``.
    """
    rule = rule or quadrature(DEFAULT_DEGREE)
    fine = ref_state.mesh
    u_h, u = _prolonged(state, ref_state)
    lam = ref_state.lambda_h
    e = u_h - u
    wq = physical_weights(fine, rule)
    pts = rule.points.T
    uq, uhq, eq = (c[fine.triangles] @ pts for c in (u, u_h, e))
    W = ref_state.problem.potential(physical_points(fine, rule))
    zeta = ref_state.problem.zeta
    a_ee = _a_norm2(fine, e)
    b_ee = float(np.sum(wq * eq * eq))
    pot = float(np.sum(wq * (W - 1.0) * eq * eq))
    cubic = float(np.sum(wq * (uhq ** 3 + uhq ** 2 * uq + uhq * uq ** 2 - uq ** 3) * eq))
    b_hh = float(np.sum(wq * uhq * uhq))
    rhs = (a_ee - lam * b_ee + pot + zeta * cubic) / b_hh
    lhs = state.lambda_h - lam
    return lhs, rhs, abs(lhs - rhs)


def write_indicators(path, values):
    """Dump per-element values as ``element_index value`` lines."""
    with open(path, "w") as f:
        for i, v in enumerate(np.asarray(values)):
            f.write(f"{i} {v:.17g}\n")
