"""Command line interface: ``gpebound {mesh,solve,certify,study,adapt}``."""
import argparse
import logging
import sys

from . import mesh as meshmod
from .certify import certify, residual_indicators, write_indicators
from .driver import CSV_HEADER, StudyConfig, adaptive_study, uniform_study
from .gpe import scf_solve


def _config_args(p):
    p.add_argument("--config", help="JSON file with StudyConfig keys")
    p.add_argument("--domain", choices=[d.value for d in meshmod.DomainPreset])
    p.add_argument("--n0", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--zeta", type=float)
    p.add_argument("--gamma", type=float, nargs=2, metavar=("G1", "G2"))
    p.add_argument("--potential-off", action="store_true", default=None,
                   help="replace the trap by W = 0")
    p.add_argument("--rt-order", type=int, choices=[0, 1])
    p.add_argument("--scf-tol", type=float)
    p.add_argument("--scf-max-iter", type=int)
    p.add_argument("--scf-damping", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--max-dofs", type=int)
    p.add_argument("--no-reference", dest="reference", action="store_false", default=None)
    p.add_argument("--deterministic", action="store_true", default=None,
                   help="write wall_ms as 0 so reruns are byte-identical")
    p.add_argument("--output", dest="output_path", help="CSV output path (default: stdout)")


_KEYS = ["domain", "n0", "levels", "zeta", "gamma", "potential_off", "rt_order", "scf_tol",
         "scf_max_iter", "scf_damping", "theta", "max_dofs", "reference", "deterministic",
         "output_path"]


def _config(args, mode):
    base = {}
    if args.config:
        import json
        with open(args.config) as f:
            base = json.load(f)
    for k in _KEYS:
        v = getattr(args, k, None)
        if v is not None:
            base[k] = v
    base["mode"] = mode
    return StudyConfig.from_dict(base)


def _cmd_mesh(args):
    if args.inspect:
        m = meshmod.read_mesh(args.inspect)
    else:
        m = meshmod.domain_mesh(args.domain, args.n)
        for _ in range(args.refine):
            m = meshmod.refine_red(m)
    m.check()
    print(f"vertices {m.n_vertices} triangles {m.n_triangles} edges {m.n_edges} "
          f"h {meshmod.mesh_size(m):.17g} min_angle {m.min_angle():.6f} area {m.areas.sum():.17g}")
    if args.out:
        meshmod.write_mesh(m, args.out)


def _state(cfg):
    m = meshmod.domain_mesh(cfg.domain, cfg.n0)
    return scf_solve(cfg.problem, m, cfg.scf)


def _cmd_solve(args):
    cfg = _config(args, "uniform")
    s = _state(cfg)
    print(f"ndof {s.ndof}")
    print(f"lambda_h {s.lambda_h:.17g}")
    print(f"E_h {s.energy_h:.17g}")
    print(f"scf_iterations {len(s.scf_log)}")


def _cmd_certify(args):
    cfg = _config(args, "uniform")
    s = _state(cfg)
    cert, flux = certify(s, cfg.rt_order)
    ind = residual_indicators(s)
    print(f"ndof {s.ndof}")
    print(f"lambda_h {s.lambda_h:.17g}")
    print(f"E_h {s.energy_h:.17g}")
    print(f"eta {cert.eta:.17g}")
    print(f"eta_residual {cert.term_residual:.17g}")
    print(f"eta_flux {cert.term_flux:.17g}")
    print(f"lambda_L {cert.lambda_L:.17g}")
    print(f"E_L {cert.energy_L:.17g}")
    print(f"eta_ad {ind.global_:.17g}")
    print(f"dual_cg_iterations {flux.solve_report.iterations}")
    if args.indicators:
        write_indicators(args.indicators, ind.per_element)


def _emit(study, cfg):
    if cfg.output_path is None:
        import csv
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in study.rows:
            w.writerow(r.csv_fields(cfg.deterministic))
    if study.reference is not None:
        print(f"# lambda_ref {study.reference.lambda_ref:.17g} E_ref {study.reference.energy_ref:.17g}",
              file=sys.stderr)


def _cmd_study(args):
    cfg = _config(args, "uniform")
    _emit(uniform_study(cfg), cfg)


def _cmd_adapt(args):
    cfg = _config(args, "adaptive")
    if args.config is None and args.domain is None:
        cfg.domain = meshmod.DomainPreset.L_SHAPE
    if args.config is None and args.n0 is None:
        cfg.n0 = 2
    _emit(adaptive_study(cfg), cfg)


def build_parser():
    p = argparse.ArgumentParser(prog="gpebound", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", help="generate, refine or inspect a mesh")
    m.add_argument("--domain", default="unit_square", choices=[d.value for d in meshmod.DomainPreset])
    m.add_argument("--n", type=int, default=6)
    m.add_argument("--refine", type=int, default=0, help="number of red refinements")
    m.add_argument("--inspect", metavar="PATH", help="read and check a mesh file instead")
    m.add_argument("--out", metavar="PATH", help="write the mesh in text format")
    m.set_defaults(func=_cmd_mesh)

    for name, func, helptext in [
        ("solve", _cmd_solve, "compute one ground state and print lambda_h, E_h"),
        ("certify", _cmd_certify, "ground state + flux + estimator + lower bounds"),
        ("study", _cmd_study, "uniform refinement study (CSV)"),
        ("adapt", _cmd_adapt, "adaptive study with Dorfler marking (CSV)"),
    ]:
        sp_ = sub.add_parser(name, help=helptext)
        _config_args(sp_)
        if name == "certify":
            sp_.add_argument("--indicators", metavar="PATH",
                             help="dump residual indicators as 'element value' lines")
        sp_.set_defaults(func=func)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
