"""Discrete Gross-Pitaevskii ground state by damped self-consistent field iteration.

The discrete problem is: find ``(lambda_h, u_h)`` in R x V_h with
``b(u_h, u_h) = 1`` and

    int grad u_h . grad v + W u_h v + zeta u_h^3 v = lambda_h int u_h v

for every P1 ``v`` vanishing on the boundary, ``W = g1 x^2 + g2 y^2``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fem import quadrature
from .fem.p1 import (P1Space, gradients, harmonic_potential, local_mass, local_potential,
                     local_stiffness, local_weighted_mass, values_at_quadrature)
from .fem.quadrature import DEFAULT_DEGREE, physical_points, physical_weights
from .linalg import smallest_eigenpair
from .mesh import DomainPreset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GpeProblem:
    """Domain, trap curvature ``gamma`` and interaction strength ``zeta``.

    ``potential_off`` replaces the trap by W = 0 (used for the Dirichlet
    Laplacian anchor, where the exact eigenvalue is known).
    """
    domain: DomainPreset = DomainPreset.UNIT_SQUARE
    gamma: tuple = (1.0, 1.0)
    zeta: float = 1.0
    potential_off: bool = False

    def __post_init__(self):
        object.__setattr__(self, "domain", DomainPreset(self.domain))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if len(self.gamma) != 2 or min(self.gamma) <= 0:
            raise ValueError("gamma must be two positive numbers")
        if self.zeta < 0:
            raise ValueError("zeta must be non-negative (attractive interactions are unsupported)")

    def potential(self, x):
        if self.potential_off:
            return np.zeros(x.shape[:-1])
        return harmonic_potential(x, self.gamma)


@dataclass(frozen=True)
class ScfOptions:
    tol: float = 1e-9
    max_iter: int = 200
    damping: float = 0.7

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")


class DomainTooCoarseError(ValueError):
    pass


class ScfError(RuntimeError):
    def __init__(self, message, scf_log):
        super().__init__(message)
        self.scf_log = scf_log


@dataclass
class GroundState:
    space: P1Space
    problem: GpeProblem
    lambda_h: float
    coeffs: np.ndarray  # full vertex vector, zero on the boundary
    energy_h: float = float("nan")
    scf_log: list = field(default_factory=list)

    @property
    def mesh(self):
        return self.space.mesh

    @property
    def ndof(self):
        return len(self.space.interior_dofs)

    def values(self, rule):
        return values_at_quadrature(self.mesh, self.coeffs, rule)

    def residual_source(self, rule):
        """lambda_h u_h - W u_h - zeta u_h^3 at the points of ``rule``."""
        u = self.values(rule)
        W = self.problem.potential(physical_points(self.mesh, rule))
        return self.lambda_h * u - W * u - self.problem.zeta * u ** 3

    def dual_source(self, rule):
        """lambda_h u_h - zeta u_h^3 - (W - 1) u_h, the load of the flux problem."""
        return self.residual_source(rule) + self.values(rule)


def integrals(mesh, problem, coeffs, rule=None):
    """Return int |grad u|^2, int W u^2, int u^4, int u^2 for a P1 vector."""
    rule = rule or quadrature(DEFAULT_DEGREE)
    wq = physical_weights(mesh, rule)
    u = values_at_quadrature(mesh, coeffs, rule)
    W = problem.potential(physical_points(mesh, rule))
    g = gradients(mesh, coeffs)
    grad2 = float(np.sum(mesh.areas * np.einsum("td,td->t", g, g)))
    return grad2, float(np.sum(wq * W * u * u)), float(np.sum(wq * u ** 4)), float(np.sum(wq * u * u))


def rayleigh_quotient(mesh, problem, coeffs, rule=None):
    grad2, pot, quart, mass = integrals(mesh, problem, coeffs, rule)
    if mass == 0.0:
        raise ValueError("Rayleigh quotient of the zero function")
    return (grad2 + pot + problem.zeta * quart) / mass


def energy_functional(mesh, problem, coeffs, rule=None):
    grad2, pot, quart, _ = integrals(mesh, problem, coeffs, rule)
    return grad2 + pot + 0.5 * problem.zeta * quart


def rayleigh(state):
    """Discrete Rayleigh quotient a^(u_h, u_h) / b(u_h, u_h)."""
    return rayleigh_quotient(state.mesh, state.problem, state.coeffs)


def energy(state):
    """E_h = lambda_h - zeta/2 int u_h^4, cross-checked against the direct integral."""
    grad2, pot, quart, mass = integrals(state.mesh, state.problem, state.coeffs)
    direct = grad2 + pot + 0.5 * state.problem.zeta * quart
    via_lambda = state.lambda_h - 0.5 * state.problem.zeta * quart
    scale = max(1.0, abs(via_lambda))
    if abs(direct - via_lambda) > 1e-8 * scale:
        raise RuntimeError(f"energy forms disagree: {direct!r} vs {via_lambda!r}")
    return via_lambda


class _Operators:
    """Dirichlet-restricted P1 operators of one mesh, reused across SCF steps."""

    def __init__(self, space, problem, rule):
        mesh = space.mesh
        self.space = space
        self.problem = problem
        self.rule = rule
        self.asm = space.interior_assembler
        base = local_stiffness(mesh)
        if not problem.potential_off:
            base = base + local_potential(mesh, problem.gamma, rule)
        self.base = base
        self.M = self.asm.assemble(local_mass(mesh))
        # int phi_i over the domain, for the sign normalization
        hats = np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas / 3.0, 3),
                           minlength=mesh.n_vertices)
        self.hat_integrals = hats[space.interior_dofs]

    def hamiltonian(self, u_full):
        local = self.base
        if self.problem.zeta != 0.0:
            w = self.problem.zeta * values_at_quadrature(self.space.mesh, u_full, self.rule) ** 2
            local = local + local_weighted_mass(self.space.mesh, w, self.rule)
        return self.asm.assemble(local)

    def bnorm(self, x):
        return float(np.sqrt(x @ (self.M @ x)))


def scf_solve(problem, mesh, opts=None, initial=None):
    """Ground state on ``mesh`` by damped SCF.

    Each step linearizes the cubic term at the current iterate, computes the
    smallest eigenpair of the resulting linear problem, fixes its sign so
    that ``int x > 0`` and mixes it into the iterate with damping ``beta``.
    ``initial`` (full vertex vector) overrides the constant starting guess.
    """
    opts = opts or ScfOptions()
    space = P1Space(mesh)
    interior = space.interior_dofs
    if len(interior) == 0:
        raise DomainTooCoarseError("mesh has no interior vertices")
    rule = quadrature(DEFAULT_DEGREE)
    ops = _Operators(space, problem, rule)

    u = np.ones(len(interior)) if initial is None else np.asarray(initial, dtype=float)[interior].copy()
    if ops.hat_integrals @ u < 0:
        u = -u
    u /= ops.bnorm(u)
    x_prev = u.copy()
    lam_prev = None
    increments = []
    beta = opts.damping
    scf_log = []
    e_prev = np.inf
    last_incr = 1.0

    for k in range(1, opts.max_iter + 1):
        H = ops.hamiltonian(space.extend(u))
        eig_tol = max(0.1 * opts.tol, min(1e-3, 0.1 * last_incr))
        mu, x, _ = smallest_eigenpair(H, ops.M, tol=eig_tol, x0=x_prev)
        if ops.hat_integrals @ x < 0:
            x = -x
        x_prev = x
        u_new = (1.0 - beta) * u + beta * x
        u_new /= ops.bnorm(u_new)
        du = ops.bnorm(u_new - u)
        last_incr = du
        e_new = energy_functional(mesh, problem, space.extend(u_new), rule)
        if e_new > e_prev + 1e-12 * max(1.0, abs(e_prev)):
            log.debug("SCF energy increased at step %d: %.16g -> %.16g", k, e_prev, e_new)
        e_prev = e_new
        scf_log.append({"iter": k, "lambda": float(mu), "increment": float(du),
                        "energy": float(e_new), "damping": beta})
        u = u_new
        if lam_prev is not None:
            increments.append(mu - lam_prev)
            if (abs(mu - lam_prev) <= opts.tol * max(1.0, abs(lam_prev)) and du <= opts.tol):
                break
            noise = opts.tol * max(1.0, abs(lam_prev))
            if (len(increments) >= 3 and min(abs(d) for d in increments[-3:]) > noise
                    and increments[-1] * increments[-2] < 0
                    and increments[-2] * increments[-3] < 0):
                beta *= 0.5
                increments.clear()
                log.debug("SCF oscillation detected; damping halved to %g", beta)
        lam_prev = mu
    else:
        raise ScfError(f"SCF did not converge in {opts.max_iter} iterations", scf_log)

    coeffs = space.extend(u)
    state = GroundState(space, problem, rayleigh_quotient(mesh, problem, coeffs, rule), coeffs,
                        scf_log=scf_log)
    state.energy_h = energy(state)
    return state
