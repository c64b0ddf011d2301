"""Command-line entry point: ``tmcts <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path


from . import harness
from .allocation import lower_bound_T, optimal_allocation
from .baselines import run_lucb_micro, run_ugape
from .engine import DEFAULT_REFRESH
from .gai import run_gai
from .glr import EmpiricalState, ThresholdParams, beta, empirical_answer, glr
from .rewards import family_to_dict, make_family
from .sampling import DEFAULT_CAP, run
from .tree import parse_means, parse_tree, serialize_means, serialize_tree


def _family(args):
    return make_family(args.family, args.sigma2)


def _load(args):
    tree = parse_tree(Path(args.tree).read_text())
    means = parse_means(Path(args.means).read_text(), tree)
    return tree, means


def _add_family(p):
    p.add_argument("--family", default="bernoulli", choices=["bernoulli", "gaussian"])
    p.add_argument("--sigma2", type=float, default=1.0, help="Gaussian variance")


def _add_instance(p):
    p.add_argument("--tree", required=True, help="tree JSON file")
    p.add_argument("--means", required=True, help="leaf name -> mean JSON file")
    p.add_argument("--theta", type=float, required=True)
    _add_family(p)


def cmd_gen(args):
    family = _family(args)
    tree, means = harness.gen_instance(args.depth, args.arity, family, args.theta, args.seed)
    if args.out_tree:
        Path(args.out_tree).write_text(serialize_tree(tree, indent=1) + "\n")
        Path(args.out_means).write_text(serialize_means(tree, means) + "\n")
    else:
        print(json.dumps(harness.instance_to_dict(tree, means)))


def cmd_alloc(args):
    tree, means = _load(args)
    alloc = optimal_allocation(tree, means, args.theta, _family(args))
    print(json.dumps({
        "answer": alloc.answer.value,
        "d_root": alloc.d_root,
        "d": {str(s): alloc.d[s] for s in range(tree.n_nodes)},
        "w": dict(zip(tree.leaf_names, alloc.w.tolist())),
    }, indent=1))


def cmd_glr(args):
    tree = parse_tree(Path(args.tree).read_text())
    counts = json.loads(Path(args.counts).read_text())
    counts = [int(counts[nm]) for nm in tree.leaf_names]
    means = parse_means(Path(args.means).read_text(), tree)
    state = EmpiricalState.from_means(counts, means)
    family = _family(args)
    z = glr(tree, state, args.theta, family)
    b = beta(state.counts, ThresholdParams(args.delta, tree.n_leaves))
    print(json.dumps({"Z": z, "beta": b, "stop": z >= b,
                      "answer": empirical_answer(tree, state, args.theta).value}))


def _record(tree, means, args, res, sampler):
    family = _family(args)
    d_root = optimal_allocation(tree, means, args.theta, family).d_root
    t_star = lower_bound_T(d_root, args.delta)
    rec = res.recommendation
    return {
        "sampler": sampler, "delta": args.delta, "depth": tree.height, "seed": args.seed,
        "tau": res.tau, "answer": str(getattr(rec, "value", rec)), "correct": bool(res.correct),
        "d_root": d_root, "t_star": t_star, "ratio": res.tau / t_star,
        "wall_time": res.wall_time, "family": family_to_dict(family),
    }


def cmd_run(args):
    tree, means = _load(args)
    family = _family(args)
    if args.sampler == "ugape":
        res = run_ugape(tree, means, args.theta, family, args.delta, args.seed, max_rounds=args.max_rounds)
    elif args.sampler == "lucb":
        res = run_lucb_micro(tree, means, args.theta, family, args.delta, args.seed, max_rounds=args.max_rounds)
    else:
        res = run(tree, means, args.theta, family, args.delta, args.sampler, args.seed, args.engine,
                  max_rounds=args.max_rounds, paranoid=args.paranoid,
                  refresh_interval=args.refresh_interval or None)
    print(json.dumps(_record(tree, means, args, res, args.sampler)))


def cmd_gai(args):
    tree, means = _load(args)
    res = run_gai(tree, means, args.theta, _family(args), args.delta, args.seed, engine=args.engine,
                  max_rounds=args.max_rounds)
    print(json.dumps({"answer": str(res.recommendation), "tau": res.tau, "correct": res.correct}))


def _write_outputs(records, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    harness.write_records(records, out / "records.jsonl")
    rows = harness.summarize(records)
    harness.emit_csv(rows, out / "summary.csv")
    harness.emit_plotdata(rows, out / "ratio.dat")
    return rows


def cmd_experiment(args):
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    config = harness.ExperimentConfig.from_dict(doc)
    if args.workers:
        config.workers = args.workers
    if args.trials:
        config.trials = args.trials
    records = harness.run_experiment(config)
    rows = _write_outputs(records, Path(args.out_dir))
    for r in rows:
        print(json.dumps(asdict(r)))


def cmd_report(args):
    records = harness.read_records(args.records)
    rows = _write_outputs(records, Path(args.out_dir))
    for r in rows:
        print(json.dumps(asdict(r)))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tmcts", description="thresholding Monte Carlo tree search")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--arity", type=int, default=3)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-tree")
    p.add_argument("--out-means")
    _add_family(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("alloc", help="optimal allocation and difficulty")
    _add_instance(p)
    p.set_defaults(func=cmd_alloc)

    p = sub.add_parser("glr", help="GLR statistic and threshold for given counts and means")
    p.add_argument("--tree", required=True)
    p.add_argument("--counts", required=True, help="leaf name -> count JSON file")
    p.add_argument("--means", required=True, help="leaf name -> empirical mean JSON file")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    _add_family(p)
    p.set_defaults(func=cmd_glr)

    for name, func in (("run", cmd_run), ("gai", cmd_gai)):
        p = sub.add_parser(name, help="one seeded run" if name == "run" else "good action identification run")
        _add_instance(p)
        p.add_argument("--delta", type=float, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--engine", choices=["naive", "fast"], default="fast")
        p.add_argument("--max-rounds", type=int, default=DEFAULT_CAP)
        if name == "run":
            p.add_argument("--sampler", choices=["rd", "d", "c", "rr", "ugape", "lucb"], default="rd")
            p.add_argument("--refresh-interval", type=int, default=DEFAULT_REFRESH,
                           help="full engine rebuild every n updates (0 disables)")
            p.add_argument("--paranoid", action="store_true", help="cross-check the fast engine every round")
        p.set_defaults(func=func)

    p = sub.add_parser("experiment", help="batch experiment from a JSON config")
    p.add_argument("--config", help="ExperimentConfig JSON (defaults when omitted)")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--workers", type=int)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="summaries and plot data from a records file")
    p.add_argument("--records", required=True)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"tmcts: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
