"""Command-line entry point: ``qmp <subcommand> [--config F] [--seed S] [--out P]``."""

import argparse
import csv
from dataclasses import replace
import logging
import sys

import numpy as np

from . import estimator, lattice
from .bench import EXPERIMENTS, default_config, load_config, run, write_table
from .bench.experiments import (
    CONNECTIVITY_HEADER,
    REPORT_HEADER,
    THEORY_HEADER,
    Table,
    _report_row,
    planner_config,
    resolve_model,
    theory_rows,
)
from .exceptions import ConfigError, NoPathFoundError, PartialTreeError, QMPError
from .planners import Tree, classical_rrt, qfps, qrrt, verify_tree
from .utils.seeding import mix

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _ints(text):
    return tuple(int(v) for v in text.split(","))


def _config(args, experiment):
    cfg = load_config(args.config, experiment) if args.config else default_config(experiment)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    for key in ("L", "r", "n", "M", "trials", "lattices", "workers", "L_values", "D_values"):
        val = getattr(args, key, None)
        if val is not None:
            over[key] = val
    if getattr(args, "periodic", False):
        over["periodic"] = True
    return replace(cfg, **over)


def _lattice(args, cfg):
    if getattr(args, "lattice", None):
        return lattice.read_lattice(args.lattice)
    return lattice.generate(cfg.d, cfg.L, cfg.r[0], cfg.seed, cfg.periodic)


def _emit(table, out):
    if out:
        write_table(out, table)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(table.header)
        w.writerows(table.rows)


def cmd_gen_lattice(args):
    cfg = _config(args, "fig-oracle-vs-r")
    lat = lattice.generate(cfg.d, cfg.L, cfg.r[0], cfg.seed, cfg.periodic)
    if args.out:
        lattice.write_lattice(lat, args.out)
    else:
        print(f"{lattice.FORMAT_TAG} L={lat.L} free={lat.free_cells.size}")
    return EXIT_OK


def cmd_components(args):
    cfg = _config(args, "fig-oracle-vs-r")
    lab = _lattice(args, cfg).labels
    rows = [(c, int(s), int(c == lab.largest)) for c, s in enumerate(lab.sizes)]
    _emit(Table(("component", "size", "largest"), rows), args.out)
    if args.out:
        size = int(lab.sizes[lab.largest]) if lab.largest >= 0 else 0
        print(f"components={lab.n_components} largest_size={size}")
    return EXIT_OK


def _start(args, lat, seed):
    if args.start:
        return np.array(_floats(args.start))
    return lattice.random_start(lat, np.random.default_rng(mix(seed, 0)))


def _print_report(report, cfg, n):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    w.writerow(_report_row(report, cfg.seed, cfg.L, cfg.r[0], n, cfg.M))


def _tree_command(args, planner):
    cfg = _config(args, "fig-oracle-vs-r")
    lat = _lattice(args, cfg)
    cfg = replace(cfg, L=lat.L, r=(lat.r,))
    x0 = _start(args, lat, cfg.seed)
    rng = np.random.default_rng(mix(cfg.seed, 1))
    pcfg = planner_config(cfg)
    code = EXIT_OK
    try:
        if planner == "qrrt":
            tree, report = qrrt(x0, cfg.n[0], cfg.M, lat, pcfg, rng, cfg.seed)
        else:
            tree, report = classical_rrt(x0, cfg.M, lat, pcfg, rng, cfg.seed)
    except PartialTreeError as exc:
        tree, report, code = exc.tree, exc.report, EXIT_PARTIAL
    if args.out:
        tree.to_csv(args.out)
    _print_report(report, cfg, cfg.n[0] if planner == "qrrt" else "")
    return code


def cmd_qrrt(args):
    return _tree_command(args, "qrrt")


def cmd_rrt(args):
    return _tree_command(args, "rrt")


def cmd_qfps(args):
    cfg = _config(args, "fig-oracle-vs-r")
    lat = _lattice(args, cfg)
    cfg = replace(cfg, L=lat.L, r=(lat.r,))
    x0 = _start(args, lat, cfg.seed)
    if not args.goal:
        raise ConfigError("qfps needs --goal x,y")
    rng = np.random.default_rng(mix(cfg.seed, 1))
    try:
        path, report = qfps(x0, np.array(_floats(args.goal)), cfg.n[0], lat, planner_config(cfg), rng, cfg.seed)
    except NoPathFoundError as exc:
        _print_report(exc.report, cfg, cfg.n[0])
        return EXIT_PARTIAL
    if args.out:
        write_table(args.out, Table(("waypoint", "x", "y"), [(i, p[0], p[1]) for i, p in enumerate(path)]))
    _print_report(report, cfg, cfg.n[0])
    return EXIT_OK


def cmd_estimate_pstar(args):
    cfg = _config(args, "fig-pstar")
    data = estimator.connectivity_grid(
        cfg.r, cfg.L_values, cfg.estimate_trials, cfg.lattices, cfg.periodic, cfg.seed
    )
    rows = [(s.r, int(s.L), int(s.periodic), s.trials, s.lattice_count, s.p_hat, s.stderr) for s in data]
    _emit(Table(CONNECTIVITY_HEADER, rows), args.out)
    return EXIT_OK

def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cmd_fit(args):
    cfg = _config(args, "fig-pstar")
    rows = _read_rows(args.data)
    if args.kind == "pstar":
        data = [
            estimator.ConnectivitySample(float(r["r"]), float(r["L"]), int(r["trials"]),
                                         int(r["lattices"]), float(r["p_hat"]), float(r["stderr"]))
            for r in rows
        ]
        init = resolve_model(cfg, cfg.pstar_model)
        model, r2 = estimator.fit_pstar(data, init=init, min_samples=args.min_samples)
    else:
        data = [
            estimator.L1Sample(float(r["r"]), float(r["D"]), int(r["trials"]),
                               int(r["lattices"]), float(r["p_hat"]), float(r["stderr"]))
            for r in rows
        ]
        L_fit = float(rows[0]["L"]) if rows and "L" in rows[0] else 72.0
        model, r2 = estimator.fit_l1(data, init=resolve_model(cfg, cfg.l1_model), L_fit=L_fit)
    name = args.name or f"{args.kind}-refit"
    coeffs = " ".join(f"{v:.6g}" for v in model.coef)
    print(f"{name} {args.kind} {coeffs} R2={r2:.6f}")
    if args.out:
        existing = {}
        try:
            existing = estimator.read_presets(args.out)
        except FileNotFoundError:
            pass
        existing[name] = (model, r2, args.data)
        estimator.write_presets(args.out, [(k, *v) for k, v in existing.items()])
    return EXIT_OK


def cmd_theory(args):
    cfg = _config(args, "theory")
    _emit(Table(THEORY_HEADER, theory_rows(cfg)), args.out)
    return EXIT_OK


def cmd_bench(args):
    if args.experiment not in EXPERIMENTS:
        print(f"unknown experiment {args.experiment!r}; known ids:", file=sys.stderr)
        for name in EXPERIMENTS:
            print(f"  {name}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = _config(args, args.experiment)
    if args.fast:
        cfg = cfg.fast()
    paths, partial = run(cfg, args.out or ".")
    for path in paths.values():
        print(path)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_verify_tree(args):
    tree = Tree.from_csv(args.tree)
    lat = lattice.read_lattice(args.lattice)
    cfg = load_config(args.config) if args.config else default_config("fig-oracle-vs-r")
    bad = verify_tree(tree, lat, cfg.dynamics_config())
    rows = [(i, tree.parents[i]) for i in bad]
    _emit(Table(("node_id", "parent_id"), rows), args.out)
    print(f"edges={len(tree) - 1} unreachable={len(bad)}", file=sys.stderr)
    return EXIT_OK if not bad else EXIT_FAIL


def _common(p):
    p.add_argument("--config", help="INI experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")


def _lattice_opts(p, with_file=True):
    p.add_argument("--L", type=int)
    p.add_argument("--r", type=_floats, help="concentration (comma list where allowed)")
    p.add_argument("--periodic", action="store_true")
    if with_file:
        p.add_argument("--lattice", help="lattice text file; overrides --L/--r")


def build_parser():
    parser = argparse.ArgumentParser(prog="qmp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-lattice", help="generate a seeded site lattice")
    _common(p)
    _lattice_opts(p, with_file=False)
    p.set_defaults(func=cmd_gen_lattice)

    p = sub.add_parser("components", help="label free components")
    _common(p)
    _lattice_opts(p)
    p.set_defaults(func=cmd_components)

    for name, func, what in (
        ("qrrt", cmd_qrrt, "grow a tree with amplified database search"),
        ("rrt", cmd_rrt, "grow a tree with the classical baseline"),
        ("qfps", cmd_qfps, "search a full start-to-goal path"),
    ):
        p = sub.add_parser(name, help=what)
        _common(p)
        _lattice_opts(p)
        p.add_argument("--start", help="x,y (default: random point of the largest component)")
        p.add_argument("--M", type=int)
        p.add_argument("--n", type=_ints)
        if name == "qfps":
            p.add_argument("--goal", help="x,y")
        p.set_defaults(func=func)

    p = sub.add_parser("estimate-pstar", help="Monte-Carlo connectivity over an (r, L) grid")
    _common(p)
    p.add_argument("--r", type=_floats)
    p.add_argument("--L-values", dest="L_values", type=_ints)
    p.add_argument("--lattices", type=int)
    p.add_argument("--periodic", action="store_true")
    p.set_defaults(func=cmd_estimate_pstar)

    p = sub.add_parser("fit", help="refit a connectivity model to CSV data")
    _common(p)
    p.add_argument("kind", choices=("pstar", "l1"))
    p.add_argument("--data", required=True)
    p.add_argument("--name")
    p.add_argument("--min-samples", type=int, default=6)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("theory", help="closed-form error table")
    _common(p)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("bench", help="run a named experiment")
    _common(p)
    p.add_argument("experiment")
    p.add_argument("--fast", action="store_true", help="cap trials per point at 10")
    p.add_argument("--workers", type=int)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify-tree", help="re-check every tree edge for reachability")
    _common(p)
    p.add_argument("--tree", required=True)
    p.add_argument("--lattice", required=True)
    p.set_defaults(func=cmd_verify_tree)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QMPError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
