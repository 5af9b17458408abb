"""Command-line front end: ``pushlsvrg <graph|run|compare|theory|solve-ref>``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import netgraph, theory
from .config import config_keys_help, load_config
from .harness import (build_problem, compare_traces, resolve_alpha, resolve_trigger_probs,
                      run_algorithms, summary_csv)

log = logging.getLogger("pushlsvrg")


def _header(cfg):
    return {"config_hash": cfg.digest, "seed": cfg.study.seed}


def cmd_graph(args):
    if args.edge_list:
        net = netgraph.read_edge_list(args.edge_list)
    else:
        net = netgraph.generate_graph(args.kind, args.m, connectivity_ratio=args.ratio,
                                      seed=args.seed, out_degree=args.out_degree,
                                      undirected=args.undirected)
    sb = net.spectral
    print(f"network      {net.describe()}")
    print(f"edges        {net.n_edges}")
    print(f"sigma_A      {sb.sigma_a:.12g}")
    print(f"pi           {' '.join(f'{p:.6g}' for p in sb.pi)}")
    print(f"theta_ratio  {sb.theta_ratio:.12g}")
    print(f"T            {sb.t_const:.12g}")
    if args.edge_list_out:
        netgraph.write_edge_list(net, args.edge_list_out)
    if args.weights_out:
        netgraph.write_weights_csv(net, args.weights_out)
    return 0


def _single_algorithm(study):
    if len(study.algorithms) != 1:
        raise ValueError("'run' takes exactly one algorithm.name; use 'compare' for several")
    return study


def cmd_run(args):
    cfg = load_config(args.config)
    study = _single_algorithm(cfg.study)
    out = args.trace or cfg.get("output.trace")
    if not out:
        raise ValueError("no trace path: set output.trace or pass --trace")
    prob = build_problem(study)
    traces = run_algorithms(study, prob)
    tr = next(iter(traces.values()))
    tr.meta.update(_header(cfg))
    tr.to_csv(out)
    print(f"{study.algorithms[0]}: {tr.final.iter} iterations, {tr.final.epoch:.6g} epochs, "
          f"final residual {tr.final.residual:.6e} -> {out}")
    return 0


def cmd_compare(args):
    cfg = load_config(args.config)
    study = cfg.study
    out_dir = Path(args.out_dir or study.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    prob = build_problem(study)
    traces = run_algorithms(study, prob)
    for name, tr in traces.items():
        tr.meta.update(_header(cfg))
        tr.to_csv(out_dir / f"{name}.csv")
    rows = compare_traces(traces)
    text = summary_csv(rows, out_dir / "summary.csv")
    print(text, end="")
    return 0


def theory_report(cfg):
    """Constants, bounds, and certificate verdicts over an alpha grid.

    Returns ``(text, csv_text, reports)``.
    """
    study = cfg.study
    prob = build_problem(study, solve=False)
    obj = prob.objective
    probs = resolve_trigger_probs(study, obj)
    c = theory.compute_constants(prob.network, obj.mu, obj.lipschitz, probs)
    bound = theory.theorem_step_bound(c)
    chosen, _ = resolve_alpha(study, prob, probs)
    grid = cfg.get("theory.alpha_grid")
    if grid is None:
        grid = [0.0] + [f * bound for f in (0.25, 0.5, 1.0, 2.0, 4.0, 10.0)]
    grid = sorted(set([float(a) for a in grid] + [chosen]))
    if any(a < 0 for a in grid):
        raise ValueError("step-sizes must be nonnegative")
    eps = cfg.get("theory.epsilon", 1e-8)
    reports = theory.alpha_scan(c, grid)

    lines = [f"# config_hash={cfg.digest}", f"network {prob.network.describe()}",
             f"objective {obj.describe()}", "constants:"]
    lines += [f"  {k:<12} {v:.10g}" for k, v in c.as_dict().items()]
    lines += [f"theorem step bound      {bound:.10g}",
              f"proposition hypothesis  {theory.proposition_step_bound(c):.10g}",
              f"configured alpha        {chosen:.10g}",
              f"iteration estimate (eps={eps:g})  {theory.iteration_complexity_estimate(c, eps):.6g}",
              "alpha grid:",
              f"  {'alpha':>14} {'rho(H)':>14} {'eta':>14}  statement proof resolvent admissible  warn"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "rho", "eta", "statement_ok", "proof_ok", "resolvent_ok",
                "elementwise_ok", "admissible", "outside_hypothesis"])
    for r in reports:
        ck = r.checks
        lines.append(f"  {r.alpha:>14.6e} {r.rho:>14.10f} {r.eta:>14.10f}  "
                     f"{ck['statement']!s:>9} {ck['proof']!s:>5} {ck['resolvent']!s:>9} "
                     f"{r.admissible!s:>10}  {'*' if r.outside_hypothesis else ''}")
        w.writerow([repr(r.alpha), repr(r.rho), repr(r.eta), ck["statement"], ck["proof"],
                    ck["resolvent"], r.elementwise_ok, r.admissible, r.outside_hypothesis])
    return "\n".join(lines) + "\n", buf.getvalue(), reports


def cmd_theory(args):
    cfg = load_config(args.config)
    text, table, _ = theory_report(cfg)
    print(text, end="")
    out = args.report or cfg.get("output.report")
    if out:
        Path(out).write_text(f"# config_hash={cfg.digest}\n" + table)
    return 0


def cmd_solve_ref(args):
    cfg = load_config(args.config)
    study = cfg.study
    if args.cache_dir:
        study = replace(study, cache_dir=args.cache_dir)
    prob = build_problem(study)
    ref = prob.reference
    print(f"grad_norm={ref.grad_norm_at_star:.3e} iterations={ref.solver_iterations}")
    out = args.output or cfg.get("output.reference")
    if out:
        with open(out, "w") as fh:
            fh.write(f"# config_hash={cfg.digest}\n# grad_norm={ref.grad_norm_at_star!r}\n"
                     f"# iterations={ref.solver_iterations}\n")
            np.savetxt(fh, ref.z_star[None, :], delimiter=",", fmt="%.17g")
    return 0


def build_parser():
    keys = "config keys:\n" + config_keys_help()
    p = argparse.ArgumentParser(prog="pushlsvrg", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", help="generate or inspect a network")
    g.add_argument("--kind", choices=netgraph.GRAPH_KINDS, default="directed_exponential")
    g.add_argument("--m", type=int, default=8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--ratio", type=float, default=0.2)
    g.add_argument("--out-degree", type=int, default=6)
    g.add_argument("--undirected", action="store_true")
    g.add_argument("--edge-list", help="inspect this edge-list file instead of generating")
    g.add_argument("--edge-list-out")
    g.add_argument("--weights-out")
    g.set_defaults(func=cmd_graph)

    fmt = argparse.RawDescriptionHelpFormatter
    for name, func, helptext, extra in (
            ("run", cmd_run, "run one algorithm and write its trace", ("--trace",)),
            ("compare", cmd_compare, "run several algorithms on one problem", ("--out-dir",)),
            ("theory", cmd_theory, "constants, step bound and certificate report", ("--report",)),
            ("solve-ref", cmd_solve_ref, "compute (and cache) the reference solution",
             ("--output", "--cache-dir"))):
        sp = sub.add_parser(name, help=helptext, description=helptext, epilog=keys,
                            formatter_class=fmt)
        sp.add_argument("config", help="config file (see keys below)")
        for flag in extra:
            sp.add_argument(flag)
        sp.set_defaults(func=func)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # one-line error for scripts
        if args.verbose:
            raise
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
