"""
Command-line entry point.

    hrcmc verify {geometry,catenoid,fermi,spectral,linear,end,graph,all}
    hrcmc sweep --parameter alpha --values 4 8 16 --suite spectral
    hrcmc mesh --alpha 2 --grid 64 --format obj --model ball
    hrcmc spectrum --alpha 4
    hrcmc solve-end --epsilon 0.05
    hrcmc solve-graph --epsilon 0.05

Configuration comes from an optional JSON file (--config) with flags on top.
Reports go to --out (a directory) when given, otherwise to stdout.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import catenoid, end_solver, graph_solver, spectral, verify
from .catenoid import CatenoidParams

logger = logging.getLogger("hrcmc")


def _common(p, *names):
    if "alpha" in names:
        p.add_argument("--alpha", type=float, help="catenoid parameter alpha > 0")
    if "epsilon" in names:
        p.add_argument("--epsilon", type=float, help="necksize eps (alternative to --alpha)")
    if "s-max" in names:
        p.add_argument("--s-max", type=float, dest="s_max", help="upper end of the s-grid")
    if "modes" in names:
        p.add_argument("--modes", type=int, help="number of angular modes")
    if "grid" in names:
        p.add_argument("--grid", type=int, help="grid size (nodes per direction)")
    if "tol" in names:
        p.add_argument("--tol", type=float, help="solver tolerance")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="hrcmc", description="catenoid geometry checks and mean curvature 1/2 solvers in H^2 x R")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=verify.SUITES + ("all",))
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _common(p, "alpha", "epsilon", "s-max", "modes", "grid", "tol")

    p = sub.add_parser("sweep", help="tracked constants against a parameter")
    p.add_argument("--parameter", choices=("alpha", "epsilon"), required=True)
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--suite", choices=("spectral", "end", "catenoid"), required=True)
    _common(p, "s-max", "modes", "tol")

    p = sub.add_parser("mesh", help="export a sampled catenoid")
    p.add_argument("--model", choices=("uhp", "ball"), default="uhp")
    p.add_argument("--format", choices=("obj", "csv"), default="obj")
    _common(p, "alpha", "epsilon", "s-max", "grid")

    p = sub.add_parser("spectrum", help="angular eigenvalues and indicial roots")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _common(p, "alpha", "epsilon", "modes")

    p = sub.add_parser("solve-end", help="cmc 1/2 normal graph over the truncated end")
    p.add_argument("--phi-mode", type=int, default=2, help="boundary data eps^2 * scale * psi_n uses this n")
    p.add_argument("--phi-scale", type=float, default=1.0, help="boundary data as a multiple of eps^2")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _common(p, "alpha", "epsilon", "s-max", "modes", "tol")

    p = sub.add_parser("solve-graph", help="Dirichlet problem for horizontal cmc 1/2 graphs")
    p.add_argument("--domain", help="domain JSON {r, holes: [{x, r}], h}")
    p.add_argument("--psi-out", type=float, help="constant boundary value on the outer circle "
                   "(default eps|log eps| (1 + 0.3 cos 2a))")
    p.add_argument("--psi-in", type=float, nargs="*", help="constant boundary values on the holes")
    p.add_argument("--seed", choices=("harmonic", "constant"), default="harmonic")
    p.add_argument("--smallness", type=float, default=0.2)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _common(p, "epsilon", "grid", "tol")
    return ap


def _load_config(args):
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    for k in ("alpha", "epsilon", "s_max", "modes", "grid", "tol"):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _params(cfg, default_eps=0.05):
    if cfg.get("alpha") is not None:
        return CatenoidParams(cfg["alpha"])
    return CatenoidParams.from_epsilon(cfg.get("epsilon", default_eps))


def _emit(args, name, text):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, name)
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
        logger.info("wrote %s", path)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_verify(args):
    vc = verify.VerifyConfig.from_dict(_load_config(args))
    rep = verify.run_suite(args.suite, vc)
    text = rep.to_json() if args.format == "json" else rep.to_csv()
    _emit(args, f"verify_{args.suite}.{args.format}", text)
    for r in rep.sorted_records():
        status = "PASS" if r["pass"] else "FAIL"
        print(f"{status} {r['tag']}: {r['quantity']} = {r['computed']}", file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_sweep(args):
    cfg = _load_config(args)
    vc = verify.VerifyConfig.from_dict({k: v for k, v in cfg.items() if k in ("s_max", "modes", "tol")})
    rows = verify.sweep(args.parameter, args.values, args.suite, vc)
    _emit(args, f"sweep_{args.suite}_{args.parameter}.csv", verify.rows_to_csv(rows))
    return 0


def cmd_mesh(args):
    cfg = _load_config(args)
    P = _params(cfg, 0.5)
    n = cfg.get("grid", 64)
    s_max = cfg.get("s_max", P.S)
    s = np.linspace(-s_max, s_max, n)
    # closed theta loop so the mesh has no seam gap
    th = np.linspace(0, 2 * np.pi, n + 1)
    grid = catenoid.build_grid(P, s, th)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"catenoid_{args.model}.{args.format}")
    catenoid.export_mesh(grid, args.format, path, args.model)
    print(path)
    return 0


def cmd_spectrum(args):
    cfg = _load_config(args)
    P = _params(cfg)
    b = spectral.assemble_cross_section(P, cfg.get("modes", spectral.DEFAULT_MODES))
    spectral.indicial_roots(b)
    if args.format == "json":
        text = json.dumps({"alpha": P.alpha, "epsilon": P.epsilon, "lambdas": b.lambdas.tolist(),
                           "gammas": b.gammas.tolist()}, indent=2, sort_keys=True)
    else:
        text = "n,lambda,gamma\n" + "".join(f"{n},{float(l)!r},{float(g)!r}\n"
                                             for n, (l, g) in enumerate(zip(b.lambdas, b.gammas)))
    _emit(args, f"spectrum.{args.format}", text)
    return 0


def cmd_solve_end(args):
    cfg = _load_config(args)
    P = _params(cfg)
    ec = end_solver.EndConfig(s_max=cfg.get("s_max"), n_modes=cfg.get("modes", spectral.DEFAULT_MODES),
                              tol=cfg.get("tol", 1e-8))
    phi = np.zeros(args.phi_mode + 1)
    phi[args.phi_mode] = args.phi_scale * P.epsilon**2
    sol = end_solver.solve_cmc_end(P, phi, ec)
    if args.format == "json":
        _emit(args, "end_solution.json", sol.to_json())
    else:
        out = args.out or "."
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "end_solution.csv")
        sol.to_csv(path)
        print(path)
    return 0


def cmd_solve_graph(args):
    cfg = _load_config(args)
    eps = cfg.get("epsilon", 0.05)
    if args.domain:
        with open(args.domain) as fh:
            dom = graph_solver.PlanarDomain.from_json(json.load(fh))
    else:
        h = 1.0 / cfg["grid"] if cfg.get("grid") else 1.0 / 128
        dom = graph_solver.PlanarDomain(1.0, [(0.0, 0.3)], h)
    if args.psi_out is None:
        amp = eps * abs(np.log(eps))
        psi_out = lambda a: amp * (1 + 0.3 * np.cos(2 * a))
    else:
        psi_out = args.psi_out
    psi_in = args.psi_in if args.psi_in is not None else [0.0] * len(dom.holes)
    data = graph_solver.DirichletData(psi_out, list(psi_in))
    gc = graph_solver.GraphConfig(tol=cfg.get("tol", 1e-8), smallness=args.smallness, seed=args.seed)
    sol = graph_solver.solve_dirichlet(dom, data, gc)
    if args.format == "json":
        _emit(args, "graph_solution.json", sol.to_json())
    else:
        out = args.out or "."
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "graph_solution.csv")
        sol.graph.to_csv(path)
        print(path)
    return 0


COMMANDS = {
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "mesh": cmd_mesh,
    "spectrum": cmd_spectrum,
    "solve-end": cmd_solve_end,
    "solve-graph": cmd_solve_graph,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
