"""Acceptance gate: one test per criterion, each run at its stated tolerance.

The outcome of every criterion is also printed as a PASS/FAIL line in the
pytest terminal summary (see conftest.py).
"""
import time

import numpy as np
import pytest

from gpebound.certify import (FluxField, certify, error_vs_reference, eta, pythagoras_gap,
                              rq_expansion_check, solve_dual)
from gpebound.driver import (StudyConfig, adaptive_study, corner_density_ratio, loglog_slope,
                             uniform_study)
from gpebound.fem import RTSpace, green_pairings
from gpebound.gpe import GpeProblem, ScfOptions, scf_solve
from gpebound.linalg import SolveReport
from gpebound.mesh import refine_red, unit_square_mesh

TWO_PI2 = 2.0 * np.pi ** 2

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def example1():
    """Unit square, zeta = 1, W = x^2 + y^2, n0 = 6, five red levels, RT1; RT0 on the side."""
    study = uniform_study(StudyConfig(n0=6, levels=5, rt_order=1))
    rt0 = [certify(r.state, 0)[0] for r in study.rows]
    return study, rt0


@pytest.fixture(scope="module")
def lshape():
    t0 = time.perf_counter()
    adaptive = adaptive_study(StudyConfig(domain="l_shape", n0=2, levels=16, theta=0.5,
                                          mode="adaptive"))
    elapsed = time.perf_counter() - t0
    uniform = uniform_study(StudyConfig(domain="l_shape", n0=2, levels=5, reference=False))
    rt0 = [certify(r.state, 0)[0] for r in adaptive.rows]
    return adaptive, uniform, rt0, elapsed


def test_c01_dirichlet_anchor(record):
    t0 = time.perf_counter()
    problem = GpeProblem(zeta=0.0, potential_off=True)
    ns = [8, 16, 32, 64]
    lam = np.array([scf_solve(problem, unit_square_mesh(n)).lambda_h for n in ns])
    elapsed = time.perf_counter() - t0
    err = np.abs(lam - TWO_PI2)
    order = loglog_slope(1.0 / np.array(ns), err)
    pairwise = np.log2(err[:-1] / err[1:])
    ok = abs(order - 2.0) <= 0.2 and err[-1] <= 0.02 and elapsed <= 60.0
    record(1, "analytic anchor 2 pi^2", ok,
           f"order {order:.3f} (pairwise {np.round(pairwise, 3).tolist()}), "
           f"|lam-2pi^2|@64 = {err[-1]:.4g}, {elapsed:.1f} s")
    assert abs(order - 2.0) <= 0.2
    assert err[-1] <= 0.02
    assert elapsed <= 60.0


def test_c02_upper_bound(example1, record):
    study, rt0 = example1
    viol = [(r.level, r.eta, r.err_a) for r in study.rows if not r.eta >= r.err_a]
    eff = [round(r.effectivity, 4) for r in study.rows]
    record(2, "eta >= ||u_ref - u_h||_a (RT1)", not viol,
           f"effectivities {eff}, violations {viol}")
    assert not viol


def test_upper_bound_rt0(example1):
    # same inequality for the cheaper RT0 flux (not a numbered criterion)
    study, rt0 = example1
    assert all(c.eta >= r.err_a for r, c in zip(study.rows, rt0))


def test_c03_asymptotic_exactness(example1, record):
    study, _ = example1
    eff = np.array([r.effectivity for r in study.rows])
    last3 = eff[-3:]
    monotone = bool(last3[0] > last3[1] > last3[2])
    in_band = bool(0.9 <= eff[-1] <= 1.5)
    # diagnostic only: add back the reference's own error, estimated from its
    # coarser companion: squared energy error ~ h^2, so ||u - u_ref||^2 ~ d^2 / 3
    ref = study.reference
    d2 = error_vs_reference(ref.coarse_state, ref.state)[0] ** 2 / 3.0
    corrected = [r.eta / np.sqrt(r.err_a ** 2 + d2) for r in study.rows]
    record(3, "effectivity decreasing over last 3 levels, finest in [0.9, 1.5]",
           monotone and in_band,
           f"eta/err_a {np.round(eff, 5).tolist()}; monotone={monotone} in_band={in_band}; "
           f"reference-bias-corrected {np.round(corrected, 5).tolist()}")
    assert in_band
    assert monotone


def test_c04_lower_bounds(example1, record):
    study, _ = example1
    ref = study.reference
    rows = [r for r in study.rows if round(1.0 / (r.h / np.sqrt(2.0))) >= 12]
    bad = [(r.level, r.lambda_L, r.E_L) for r in rows
           if not (r.lambda_L <= ref.lambda_ref and r.E_L <= ref.energy_ref)]
    record(4, "lambda_L <= lambda_ref and E_L <= E_ref for n >= 12", not bad and len(rows) == 4,
           f"lambda_ref {ref.lambda_ref:.8f}, lambda_L {[round(r.lambda_L, 5) for r in rows]}, "
           f"E_ref {ref.energy_ref:.8f}, E_L {[round(r.E_L, 5) for r in rows]}")
    assert len(rows) == 4
    assert not bad


def test_c05_rates(example1, record):
    study, _ = example1
    h = [r.h for r in study.rows]
    s_err = loglog_slope(h, [r.err_a for r in study.rows])
    s_eta = loglog_slope(h, [r.eta for r in study.rows])
    s_lam = loglog_slope(h, [r.lambda_h - study.reference.lambda_ref for r in study.rows])
    ok = abs(s_err - 1) <= 0.15 and abs(s_eta - 1) <= 0.15 and abs(s_lam - 2) <= 0.3
    record(5, "log-log slopes vs h", ok, f"err_a {s_err:.3f}, eta {s_eta:.3f}, lambda {s_lam:.3f}")
    assert abs(s_err - 1.0) <= 0.15
    assert abs(s_eta - 1.0) <= 0.15
    assert abs(s_lam - 2.0) <= 0.3


def test_c06_pythagoras(rng, record):
    state = scf_solve(GpeProblem(), unit_square_mesh(12))
    flux = solve_dual(state, 1)
    eta_p = eta(state, flux).eta
    worst = 0.0
    for _ in range(10):
        delta = rng.standard_normal(flux.rt_space.ndof)
        delta *= eta_p * 10.0 ** rng.uniform(-2, 0) / np.linalg.norm(delta)
        q = FluxField(flux.rt_space, flux.coeffs + delta, SolveReport(0, 0.0, True))
        _, gap = pythagoras_gap(state, flux, q)
        worst = max(worst, gap / eta(state, q).eta ** 2)
    record(6, "discrete Pythagoras, 10 perturbations", worst <= 1e-10, f"max scaled defect {worst:.3e}")
    assert worst <= 1e-10


def test_c07_green_identity(record):
    mesh = unit_square_mesh(4)
    worst = 0.0
    for order in (0, 1):
        G, scale = green_pairings(RTSpace(mesh, order))
        assert np.all(G[scale == 0] == 0)
        nz = scale > 0
        worst = max(worst, float(np.max(np.abs(G[nz]) / scale[nz])))
    record(7, "discrete Green identity on n=4", worst <= 1e-12, f"max scaled residual {worst:.3e}")
    assert worst <= 1e-12


def test_c08_nested_monotonicity(example1, lshape, record):
    study, rt0_1 = example1
    adaptive, _, rt0_2, _ = lshape
    bad = [("ex1", r.level) for r, c0 in zip(study.rows, rt0_1) if not r.eta <= c0.eta]
    bad += [("lshape", r.level) for r, c0 in zip(adaptive.rows, rt0_2) if not r.eta <= c0.eta]
    ratios = [round(c0.eta / r.eta, 3) for r, c0 in zip(study.rows, rt0_1)]
    record(8, "eta(RT1) <= eta(RT0), both examples", not bad,
           f"{len(study.rows) + len(adaptive.rows)} comparisons, ex1 RT0/RT1 {ratios}, violations {bad}")
    assert not bad


def test_c09_rq_expansion(record):
    problem = GpeProblem()
    coarse = unit_square_mesh(12)
    state = scf_solve(problem, coarse)
    fine = refine_red(refine_red(coarse))
    ref = scf_solve(problem, fine, ScfOptions(tol=1e-11))
    lhs, rhs, disc = rq_expansion_check(state, ref)
    record(9, "Rayleigh-quotient expansion n=12 vs n=48", disc <= 1e-9,
           f"lhs {lhs:.12e}, rhs {rhs:.12e}, |diff| {disc:.3e}")
    assert disc <= 1e-9


def test_c10_adaptive_lshape(lshape, record):
    adaptive, uniform, _, elapsed = lshape
    lam_ref = adaptive.reference.lambda_ref
    rows = adaptive.rows
    density = corner_density_ratio(rows[-1].state.mesh, (0.0, 0.0), 0.1)
    s_ad = loglog_slope([r.ndof for r in rows], [r.lambda_h - lam_ref for r in rows])
    s_un = loglog_slope([r.ndof for r in uniform.rows], [r.lambda_h - lam_ref for r in uniform.rows])
    ok = len(rows) >= 10 and density >= 4.0 and s_ad < s_un and elapsed <= 300.0
    record(10, "adaptive L-shape", ok,
           f"{len(rows)} iterations to {rows[-1].ndof} dofs, corner density x{density:.2f}, "
           f"slope adaptive {s_ad:.3f} vs uniform {s_un:.3f}, {elapsed:.1f} s")
    assert len(rows) >= 10
    assert density >= 4.0
    assert s_ad < s_un
    assert elapsed <= 300.0


def test_c11_scf_robustness(record):
    mesh = unit_square_mesh(24)
    its = {}
    for zeta in (0.0, 1.0, 10.0):
        s = scf_solve(GpeProblem(zeta=zeta), mesh, ScfOptions(tol=1e-9, max_iter=200))
        its[zeta] = len(s.scf_log)
    ok = all(k <= 200 for k in its.values())
    record(11, "SCF converges for zeta in {0, 1, 10}", ok, f"iterations {its}")
    assert ok
