"""Uniform and adaptive studies, reference solutions and CSV reporting."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .certify import certify, error_vs_reference, residual_indicators
from .fem.p1 import prolong
from .gpe import GpeProblem, ScfOptions, scf_solve
from .mesh import DomainPreset, domain_mesh, mesh_size, refine_bisect, refine_red

log = logging.getLogger(__name__)

CSV_HEADER = ["level", "h", "ndof", "lambda_h", "E_h", "eta", "lambda_L", "E_L",
              "eta_ad", "err_a", "effectivity", "wall_ms"]


@dataclass
class StudyConfig:
    """Study parameters; defaults reproduce the unit-square example (zeta = 1, W = x^2 + y^2)."""
    domain: DomainPreset = DomainPreset.UNIT_SQUARE
    n0: int = 6
    levels: int = 5
    zeta: float = 1.0
    gamma: tuple = (1.0, 1.0)
    potential_off: bool = False
    rt_order: int = 1
    scf: ScfOptions = field(default_factory=ScfOptions)
    theta: float = 0.5
    mode: str = "uniform"
    max_dofs: int = 200_000
    reference: bool = True
    deterministic: bool = False
    output_path: str | None = None

    def __post_init__(self):
        self.domain = DomainPreset(self.domain)
        self.gamma = tuple(self.gamma)
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if self.mode not in ("uniform", "adaptive"):
            raise ValueError("mode must be 'uniform' or 'adaptive'")
        if self.rt_order not in (0, 1):
            raise ValueError("rt_order must be 0 or 1")

    @property
    def problem(self):
        return GpeProblem(self.domain, self.gamma, self.zeta, self.potential_off)

    @classmethod
    def from_dict(cls, d):
        """Build from a flat mapping; ``scf_tol``, ``scf_max_iter``, ``scf_damping`` set the SCF."""
        d = dict(d)
        scf = ScfOptions(tol=float(d.pop("scf_tol", 1e-9)),
                         max_iter=int(d.pop("scf_max_iter", 200)),
                         damping=float(d.pop("scf_damping", 0.7)))
        known = {f.name for f in dataclasses.fields(cls)} - {"scf"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(scf=scf, **d)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class StudyRow:
    level: int
    h: float
    ndof: int
    lambda_h: float
    E_h: float
    eta: float
    lambda_L: float
    E_L: float
    eta_ad: float
    err_a: float | None = None
    effectivity: float | None = None
    wall_ms: float = 0.0
    # in-memory artefacts, not written to CSV
    state: object = field(default=None, repr=False, compare=False)
    certificate: object = field(default=None, repr=False, compare=False)
    indicators: object = field(default=None, repr=False, compare=False)

    def csv_fields(self, deterministic=False):
        out = []
        for name in CSV_HEADER:
            v = getattr(self, name)
            if name == "wall_ms" and deterministic:
                v = 0
            if v is None:
                out.append("")
            elif isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            else:
                out.append(f"{float(v):.17g}")
        return out


@dataclass
class Reference:
    lambda_ref: float
    energy_ref: float
    state: object  # finest reference solve
    coarse_state: object  # one refinement coarser


@dataclass
class Study:
    config: StudyConfig
    rows: list
    reference: Reference | None = None


def dorfler_mark(indicators, theta=0.5):
    """Minimal set carrying a ``theta`` fraction of the squared indicators."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    eta = getattr(indicators, "per_element", indicators)
    eta2 = np.asarray(eta, dtype=float) ** 2
    if eta2.size == 0:
        raise ValueError("empty indicator list")
    order = np.lexsort((np.arange(eta2.size), -eta2))
    csum = np.cumsum(eta2[order])
    if csum[-1] == 0.0:
        return set()
    k = int(np.searchsorted(csum, theta * csum[-1], side="left")) + 1
    return set(order[:k].tolist())


def _solve(problem, mesh, opts, prev=None):
    init = None if prev is None else prolong(prev.mesh, mesh, prev.coeffs)
    return scf_solve(problem, mesh, opts, initial=init)


def _row(level, state, rt_order, t0):
    cert, _ = certify(state, rt_order)
    ind = residual_indicators(state)
    return StudyRow(level=level, h=mesh_size(state.mesh), ndof=state.ndof,
                    lambda_h=state.lambda_h, E_h=state.energy_h, eta=cert.eta,
                    lambda_L=cert.lambda_L, E_L=cert.energy_L, eta_ad=ind.global_,
                    wall_ms=1000.0 * (time.perf_counter() - t0),
                    state=state, certificate=cert, indicators=ind)


def compute_reference(config, finest_mesh, finest_state=None):
    """Two red refinements of ``finest_mesh``; lambda and E Richardson-extrapolated (order 2)."""
    problem = config.problem
    m1 = refine_red(finest_mesh)
    s1 = _solve(problem, m1, config.scf, finest_state)
    m2 = refine_red(m1)
    s2 = _solve(problem, m2, config.scf, s1)
    lam = s2.lambda_h + (s2.lambda_h - s1.lambda_h) / 3.0
    en = s2.energy_h + (s2.energy_h - s1.energy_h) / 3.0
    return Reference(lam, en, s2, s1)


def _fill_errors(rows, ref):
    for r in rows:
        err, eff = error_vs_reference(r.state, ref.state, r.eta)
        r.err_a, r.effectivity = err, eff


def write_csv(rows, path, deterministic=False, error_level=None):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.csv_fields(deterministic))
        if error_level is not None:
            w.writerow([str(error_level)] + ["nan"] * (len(CSV_HEADER) - 1))


def _run(config, body):
    rows = []
    try:
        ref = body(rows)
    except Exception:
        if config.output_path:
            write_csv(rows, config.output_path, config.deterministic, error_level=len(rows) + 1)
        raise
    if config.output_path:
        write_csv(rows, config.output_path, config.deterministic)
    return Study(config, rows, ref)


def uniform_study(config):
    """Red-refinement ladder from ``domain_mesh(n0)`` with certification on each level."""
    problem = config.problem

    def body(rows):
        mesh = domain_mesh(config.domain, config.n0)
        prev = None
        for level in range(1, config.levels + 1):
            if level > 1:
                mesh = refine_red(mesh)
            t0 = time.perf_counter()
            state = _solve(problem, mesh, config.scf, prev)
            rows.append(_row(level, state, config.rt_order, t0))
            log.info("level %d: ndof=%d lambda_h=%.10g eta=%.6g", level, state.ndof,
                     state.lambda_h, rows[-1].eta)
            prev = state
        if not config.reference:
            return None
        ref = compute_reference(config, mesh, prev)
        _fill_errors(rows, ref)
        return ref

    return _run(config, body)


def adaptive_study(config):
    """Solve -> indicators -> Dorfler marking -> newest-vertex bisection."""
    problem = config.problem

    def body(rows):
        mesh = domain_mesh(config.domain, config.n0)
        prev = None
        for level in range(1, config.levels + 1):
            t0 = time.perf_counter()
            state = _solve(problem, mesh, config.scf, prev)
            rows.append(_row(level, state, config.rt_order, t0))
            log.info("iteration %d: ndof=%d lambda_h=%.10g eta=%.6g", level, state.ndof,
                     state.lambda_h, rows[-1].eta)
            prev = state
            if level == config.levels or state.ndof >= config.max_dofs:
                break
            marked = dorfler_mark(rows[-1].indicators, config.theta)
            mesh = refine_bisect(mesh, marked)
        if not config.reference:
            return None
        ref = compute_reference(config, mesh, prev)
        _fill_errors(rows, ref)
        return ref

    return _run(config, body)


def run_uniform(config):
    if config.mode != "uniform":
        raise ValueError("run_uniform needs mode='uniform'")
    return uniform_study(config).rows


def run_adaptive(config):
    if config.mode != "adaptive":
        raise ValueError("run_adaptive needs mode='adaptive'")
    return adaptive_study(config).rows


def loglog_slope(x, y):
    """Least-squares slope of log(y) against log(x)."""
    x, y = np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float)))
    return float(np.polyfit(x, y, 1)[0])


def corner_density_ratio(mesh, corner=(0.0, 0.0), radius=0.1):
    """Element density near ``corner`` over the mesh-average density."""
    c = mesh.centroids - np.asarray(corner)
    near = np.hypot(c[:, 0], c[:, 1]) < radius
    near_area = mesh.areas[near].sum()
    if near_area == 0:
        return 0.0
    return (near.sum() / near_area) / (mesh.n_triangles / mesh.areas.sum())

