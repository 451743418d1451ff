"""Command-line entry point: ``n2e run|clip|approx|oracle|gen``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import oracles
from .clipping import clip_graph, pi_theta_clip
from .degree_approx import node_dp_max_degree_exp, node_dp_max_degree_poly
from .dp import NoiseSource
from .graph import generate, load_edge_list, parse_generator_spec, write_edge_list
from .harness import ExperimentConfig, ExperimentError, read_config, run_experiment


def _dump(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write("\n")


def _graph_from_args(args):
    if args.input:
        return load_edge_list(args.input).graph
    model, params = parse_generator_spec(args.generator)
    return generate(model, np.random.default_rng(args.graph_seed), **params)


def _add_graph_source(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--input", "--dataset", dest="input", help="edge-list file (whitespace separated, '#' comments)")
    g.add_argument("--generator", help="synthetic graph, e.g. 'gnp:n=200,p=0.05' or 'preferential:n=300,m=3'")
    p.add_argument("--graph-seed", type=int, default=0, help="seed for the synthetic generator (default 0)")


def cmd_run(args) -> int:
    values = read_config(args.config) if args.config else {}
    flags = {
        "task": args.task, "dataset": args.input, "generator": args.generator, "graph_seed": args.graph_seed,
        "eps": args.eps, "delta": args.delta, "beta": args.beta, "split": args.split, "method": args.method,
        "seed": args.seed, "rounds": args.rounds, "workers": args.workers, "lp_workers": args.lp_workers,
        "noise": args.noise, "out_dir": args.out_dir, "name": args.name,
    }
    if args.no_trim:
        flags["trim"] = False
    if flags["dataset"] or flags["generator"]:
        values.pop("dataset", None)
        values.pop("generator", None)
    values.update({k: v for k, v in flags.items() if v is not None})
    try:
        cfg = ExperimentConfig.from_mapping(values)
    except ValueError as exc:
        print(f"n2e run: {exc}", file=sys.stderr)
        return 2
    try:
        out = run_experiment(cfg)
    except ExperimentError as exc:
        print(f"n2e run: {exc}", file=sys.stderr)
        return 1
    if args.verbose:
        _dump(out)
    else:
        _dump({"summary": out["summary"], "files": out.get("files"),
               "rounds": [{"round": r["round"], "value": r["value"], "estimate": r["result"]["value"]}
                          for r in out["rounds"]]})
    return 0


def cmd_clip(args) -> int:
    g = load_edge_list(args.input).graph
    rep = pi_theta_clip(g, args.tau) if args.greedy else clip_graph(g, args.tau)
    with open(args.output, "w") as fh:
        write_edge_list(rep.clipped, fh, header=f"clipped at tau={args.tau}")
    _dump(rep.as_dict())
    return 0


def cmd_approx(args) -> int:
    g = _graph_from_args(args)
    src = NoiseSource(args.seed)
    if args.method == "exp":
        out = node_dp_max_degree_exp(g, args.eps, args.delta, args.beta, src)
    else:
        out = node_dp_max_degree_poly(g, args.eps, args.delta, args.beta, src, workers=args.workers)
    _dump(out.as_dict())
    return 0


def cmd_oracle(args) -> int:
    if args.list:
        print("\n".join(sorted(oracles.PROPERTIES)))
        return 0
    if args.property not in oracles.PROPERTIES:
        print(f"n2e oracle: unknown property {args.property!r}; use --list", file=sys.stderr)
        return 2
    kw = {"seed": args.seed}
    if args.trials is not None:
        kw["triggered" if args.property == "early-stop" else
           "seeds" if args.property == "svt-utility" else "trials"] = args.trials
    rep = oracles.PROPERTIES[args.property](**kw)
    _dump(rep.as_dict())
    return 0 if rep.passed else 1


def cmd_gen(args) -> int:
    model, params = parse_generator_spec(args.spec)
    g = generate(model, np.random.default_rng(args.seed), **params)
    header = f"{args.spec} seed={args.seed} nodes={g.n} edges={g.m}"
    if args.output and args.output != "-":
        with open(args.output, "w") as fh:
            write_edge_list(g, fh, header=header)
    else:
        write_edge_list(g, sys.stdout, header=header)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="n2e", description="Node-level private graph statistics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="repeated private query answering with a CSV summary")
    p.add_argument("--config", help="flat key = value file; flags override it")
    _add_graph_source(p, required=False)
    p.add_argument("--task", choices=["ec", "tp", "md", "dd"], help="edge count, two-paths, max degree, "
                   "degree distribution (default ec)")
    p.add_argument("--eps", type=float, help="total privacy budget (default 0.8, or 3.2 for dd)")
    p.add_argument("--delta", type=float, help="total delta (default 2^-30; ignored by dd)")
    p.add_argument("--beta", type=float, help="failure probability for the utility bounds (default 0.1)")
    p.add_argument("--split", choices=["theory", "empirical"], help="budget split preset (default empirical)")
    p.add_argument("--method", choices=["n2e", "baseline"], help="pipeline or group-privacy baseline (default n2e)")
    p.add_argument("--seed", type=int, help="64-bit noise seed (default 0)")
    p.add_argument("--rounds", type=int, help="number of repetitions (default 10)")
    p.add_argument("--workers", type=int, help="rounds evaluated concurrently (default 1)")
    p.add_argument("--lp-workers", type=int, help="LP candidates evaluated concurrently per round (default 1)")
    p.add_argument("--noise", choices=["laplace", "zero"], help="'zero' replaces every draw by 0 (debugging)")
    p.add_argument("--no-trim", action="store_true", help="plain mean instead of the trimmed mean")
    p.add_argument("--out-dir", help="write <name>.rounds.jsonl and <name>.summary.csv here")
    p.add_argument("--name", help="file name stem for outputs")
    p.add_argument("-v", "--verbose", action="store_true", help="print every round's full output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("clip", help="clip an edge list at a degree bound")
    p.add_argument("--input", required=True, help="edge-list file")
    p.add_argument("--tau", type=int, required=True, help="degree bound")
    p.add_argument("--greedy", action="store_true", help="greedy endpoint clipping instead of order clipping")
    p.add_argument("--output", required=True, help="where to write the clipped edge list")
    p.set_defaults(func=cmd_clip)

    p = sub.add_parser("approx", help="private node-level maximum-degree bound")
    _add_graph_source(p)
    p.add_argument("--method", choices=["poly", "exp"], default="poly", help="LP relaxation or exact (N <= 16)")
    p.add_argument("--eps", type=float, default=0.8, help="privacy budget (default 0.8)")
    p.add_argument("--delta", type=float, default=2.0 ** -30, help="delta (default 2^-30)")
    p.add_argument("--beta", type=float, default=0.1, help="failure probability (default 0.1)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default 0)")
    p.add_argument("--workers", type=int, default=1, help="concurrent LP candidates (default 1)")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("oracle", help="run a property check; exits 1 on violation")
    p.add_argument("--property", help="property id (see --list)")
    p.add_argument("--list", action="store_true", help="list property ids")
    p.add_argument("--trials", type=int, help="override the number of trials")
    p.add_argument("--seed", type=int, default=0, help="instance seed (default 0)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="write a synthetic graph as an edge list")
    p.add_argument("spec", help="e.g. 'gnp:n=200,p=0.05', 'preferential:n=300,m=3', 'cycle:n=20', 'star:k=10'")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "oracle" and not args.list and not args.property:
        print("n2e oracle: give --property or --list", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"n2e {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
