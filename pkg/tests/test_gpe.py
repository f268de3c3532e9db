import numpy as np
import pytest

from gpebound.driver import loglog_slope
from gpebound.fem import assemble_p1, quadrature
from gpebound.fem.p1 import values_at_quadrature
from gpebound.fem.quadrature import physical_weights
from gpebound.gpe import (DomainTooCoarseError, GpeProblem, ScfError, ScfOptions, energy,
                          energy_functional, rayleigh, rayleigh_quotient, scf_solve)
from gpebound.mesh import l_shape_mesh, unit_square_mesh


@pytest.fixture(scope="module")
def ex1_12():
    return scf_solve(GpeProblem(), unit_square_mesh(12))


def _quartic(mesh, coeffs):
    # degree-4 rule is exact for a P1 function to the fourth power
    rule = quadrature(4)
    return float(np.sum(physical_weights(mesh, rule) * values_at_quadrature(mesh, coeffs, rule) ** 4))


def test_state_postconditions(ex1_12):
    s = ex1_12
    M = assemble_p1(s.mesh, "mass")
    assert s.coeffs @ (M @ s.coeffs) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(s.coeffs[s.mesh.triangles].sum(axis=1) * s.mesh.areas) > 0
    assert np.all(s.coeffs[s.mesh.boundary_vertices] == 0.0)
    assert np.all(s.coeffs >= -1e-12)  # ground state is positive
    assert rayleigh(s) == pytest.approx(s.lambda_h, rel=1e-11)
    assert len(s.scf_log) <= 200


def test_regression_value(ex1_12):
    # frozen from this implementation; independent of the reference machinery
    assert ex1_12.lambda_h == pytest.approx(22.856042993632993, abs=1e-7)


def test_rayleigh_quotient_direct_oracle(ex1_12):
    s = ex1_12
    m, u, p = s.mesh, s.coeffs, s.problem
    K = assemble_p1(m, "stiffness")
    V = assemble_p1(m, "potential", gamma=p.gamma)
    for c in (1.0, 2.0, -0.5):
        quad = (c * u) @ ((K + V) @ (c * u))
        mass = c * c
        expected = (quad + p.zeta * _quartic(m, c * u)) / mass
        assert rayleigh_quotient(m, p, c * u) == pytest.approx(expected, rel=1e-12)


def test_linear_quotient_scale_invariant(rng):
    m = unit_square_mesh(6)
    p = GpeProblem(zeta=0.0)
    u = rng.uniform(0.1, 1.0, m.n_vertices)
    u[m.boundary_vertices] = 0.0
    assert rayleigh_quotient(m, p, 3.7 * u) == pytest.approx(rayleigh_quotient(m, p, u), rel=1e-13)
    with pytest.raises(ValueError):
        rayleigh_quotient(m, p, np.zeros(m.n_vertices))


def test_energy_relations(ex1_12):
    s = ex1_12
    assert s.energy_h <= s.lambda_h
    assert s.energy_h == pytest.approx(s.lambda_h - 0.5 * s.problem.zeta * _quartic(s.mesh, s.coeffs),
                                       rel=1e-12)
    lin = scf_solve(GpeProblem(zeta=0.0), unit_square_mesh(6))
    assert energy(lin) == lin.lambda_h


def test_energy_direct_quadrature_n48():
    s = scf_solve(GpeProblem(), unit_square_mesh(48))
    m, u, p = s.mesh, s.coeffs, s.problem
    K = assemble_p1(m, "stiffness")
    V = assemble_p1(m, "potential", gamma=p.gamma)
    direct = u @ ((K + V) @ u) + 0.5 * p.zeta * _quartic(m, u)
    assert s.energy_h == pytest.approx(direct, rel=1e-9)
    assert energy_functional(m, p, u) == pytest.approx(direct, rel=1e-12)


def test_dirichlet_anchor():
    s = scf_solve(GpeProblem(zeta=0.0, potential_off=True), unit_square_mesh(32))
    assert abs(s.lambda_h - 2 * np.pi ** 2) < 0.05


def test_example1_order_two():
    lam = [scf_solve(GpeProblem(), unit_square_mesh(n)).lambda_h for n in (6, 12, 24, 48)]
    assert all(a > b for a, b in zip(lam, lam[1:]))
    ref = lam[-1] + (lam[-1] - lam[-2]) / 3.0
    order = loglog_slope([1 / 6, 1 / 12, 1 / 24], np.array(lam[:3]) - ref)
    assert order == pytest.approx(2.0, abs=0.15)


@pytest.mark.parametrize("zeta", [0.0, 1.0, 10.0])
def test_scf_converges_on_l_shape(zeta):
    s = scf_solve(GpeProblem(domain="l_shape", zeta=zeta), l_shape_mesh(4))
    assert rayleigh(s) == pytest.approx(s.lambda_h, rel=1e-11)


def test_warm_start_matches_cold_start(ex1_12):
    warm = scf_solve(GpeProblem(), unit_square_mesh(12), initial=ex1_12.coeffs)
    assert warm.lambda_h == pytest.approx(ex1_12.lambda_h, rel=1e-8)
    assert len(warm.scf_log) < len(ex1_12.scf_log)


def test_errors():
    with pytest.raises(DomainTooCoarseError):
        scf_solve(GpeProblem(), unit_square_mesh(1))
    with pytest.raises(ScfError) as info:
        scf_solve(GpeProblem(), unit_square_mesh(6), ScfOptions(max_iter=1))
    assert len(info.value.scf_log) == 1
    with pytest.raises(ValueError):
        GpeProblem(zeta=-1.0)
    with pytest.raises(ValueError):
        GpeProblem(gamma=(1.0, 0.0))
    with pytest.raises(ValueError):
        ScfOptions(damping=0.0)
