"""Random instances, batch Monte Carlo experiments and their summaries."""
from __future__ import annotations

import csv
import gc
import hashlib
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .allocation import ROOT_TIE_TOL, argmax_margin, lower_bound_T, optimal_allocation
from .baselines import run_lucb_micro, run_ugape
from .engine import IncrementalEngine, NaiveEngine
from .errors import RoundCapExceeded
from .gai import run_gai
from .glr import EmpiricalState
from .rewards import Bernoulli, make_family
from .sampling import DEFAULT_CAP, run, select_forced, select_rd
from .tree import MAX, GameTree, complete_tree, node_values

# Fixed global order; a sampler's position here enters its trial seeds.
SAMPLERS = ("rd", "d", "c", "rr", "ugape", "lucb", "gai")
MARGIN_TOL = 1e-6
RESAMPLE_CAP = 1000
CSV_HEADER = ["sampler", "delta", "depth", "mean_tau", "std_tau", "mean_ratio", "std_ratio", "errors", "trials"]


class ResampleCapExceeded(RuntimeError):
    pass


# -- instances ---------------------------------------------------------------

def _draw_means(rng, family, theta, n):
    if isinstance(family, Bernoulli):
        return rng.uniform(0.05, 0.95, n)
    return theta + rng.standard_normal(n)


def _in_domain(family, means) -> bool:
    return all(family.in_interior(float(m)) for m in means)


def gen_instance(depth: int, arity: int, family, theta: float, seed: int):
    """Complete tree with alternating labels and the second-best root child placed at the threshold.

    The second-best root child's subtree is shifted by a constant so its value
    equals ``theta``. Candidates breaking the standing assumptions (root value
    at the threshold, near-tied argmax in the allocation, means outside the
    family's domain, shifted child no longer second) are redrawn.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    tree = complete_tree(depth, arity, MAX)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    kids = tree.children[tree.root]
    for _ in range(RESAMPLE_CAP):
        means = _draw_means(rng, family, theta, tree.n_leaves)
        if len(kids) >= 2:
            vals = node_values(tree, means)
            order = sorted(kids, key=lambda c: (-vals[c], c))
            second = order[1]
            lo, hi = tree.leaf_span[second]
            means[lo:hi] += theta - vals[second]
            # Pin the leaf that carries the child's value exactly onto theta.
            vals = node_values(tree, means)
            if vals[second] != theta:
                carrier = int(np.argmin(np.abs(means[lo:hi] - vals[second]))) + lo
                means[carrier] = theta
                vals = node_values(tree, means)
            if vals[second] != theta:
                continue
            if not (vals[order[0]] > theta and all(vals[c] <= theta for c in order[2:])):
                continue
        means = [float(m) for m in means]
        if not _in_domain(family, means):
            continue
        if abs(node_values(tree, means)[tree.root] - theta) <= ROOT_TIE_TOL:
            continue
        if argmax_margin(tree, means, theta, family) < MARGIN_TOL:
            continue
        return tree, means
    raise ResampleCapExceeded(f"no valid instance after {RESAMPLE_CAP} draws")


def instance_to_dict(tree: GameTree, means) -> dict:
    return {"tree": tree.to_dict(), "means": dict(zip(tree.leaf_names, map(float, means)))}


def instance_from_dict(doc: dict):
    tree = GameTree.from_dict(doc["tree"])
    means = [float(doc["means"][nm]) for nm in tree.leaf_names]
    return tree, means


# -- experiment configuration and records ---------------------------------------

@dataclass
class ExperimentConfig:
    depth: int = 2
    arity: int = 3
    family: str = "bernoulli"
    sigma2: float = 1.0
    theta: float = 0.5
    deltas: list = field(default_factory=lambda: [1e-5, 1e-10, 1e-20])
    samplers: list = field(default_factory=lambda: ["rd", "d", "rr"])
    trials: int = 10
    master_seed: int = 0
    instances: int = 1
    instance_seeds: list | None = None      # overrides seeds derived from master_seed
    engine: str = "fast"
    workers: int | None = None
    max_rounds: int = DEFAULT_CAP

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for d in self.deltas:
            if not 0.0 < d < 1.0:
                raise ValueError(f"delta {d} outside (0, 1)")
        for s in self.samplers:
            if s not in SAMPLERS:
                raise ValueError(f"unknown sampler {s!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        doc = self.to_dict()
        doc.pop("workers")
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:12]

    def seeds(self) -> list:
        if self.instance_seeds is not None:
            return list(self.instance_seeds)
        ss = np.random.SeedSequence([self.master_seed, 0x1D])
        return [int(s) for s in ss.generate_state(self.instances, dtype=np.uint32)]

    def family_obj(self):
        return make_family(self.family, self.sigma2)


@dataclass
class TrialRecord:
    config_hash: str
    instance: int
    sampler: str
    delta: float
    depth: int
    seed: list
    tau: int
    answer: str
    correct: bool
    d_root: float
    t_star: float
    ratio: float
    wall_time: float = 0.0
    capped: bool = False

    def key(self) -> tuple:
        return (self.instance, SAMPLERS.index(self.sampler), self.delta, self.seed[-1])


def trial_seed(master: int, instance: int, sampler: str, delta_index: int, trial: int) -> list:
    return [int(master), int(instance), SAMPLERS.index(sampler), int(delta_index), int(trial)]


def run_trial(tree, means, theta, family, delta, sampler, seed, engine="fast", max_rounds=DEFAULT_CAP):
    if sampler == "ugape":
        return run_ugape(tree, means, theta, family, delta, seed, max_rounds=max_rounds)
    if sampler == "lucb":
        return run_lucb_micro(tree, means, theta, family, delta, seed, max_rounds=max_rounds)
    if sampler == "gai":
        return run_gai(tree, means, theta, family, delta, seed, engine=engine, max_rounds=max_rounds)
    eng = engine if sampler in ("rd", "rr") else "naive"
    return run(tree, means, theta, family, delta, sampler, seed, eng, max_rounds=max_rounds)


def _work(item):
    (chash, inst, tree, means, theta, family, delta, didx, sampler, trial, master, engine, cap, d_root) = item
    seed = trial_seed(master, inst, sampler, didx, trial)
    t_star = lower_bound_T(d_root, delta)
    try:
        res = run_trial(tree, means, theta, family, delta, sampler, seed, engine, cap)
    except RoundCapExceeded:
        return TrialRecord(chash, inst, sampler, delta, tree.height, seed, cap, "none", False,
                           d_root, t_star, cap / t_star, 0.0, True)
    return TrialRecord(chash, inst, sampler, delta, tree.height, seed, res.tau, str(getattr(res.recommendation, "value", res.recommendation)),
                       bool(res.correct), d_root, t_star, res.tau / t_star, res.wall_time)


def default_workers() -> int:
    cap = os.environ.get("TMCTS_THREADS")
    n = os.cpu_count() or 1
    return max(1, min(n, int(cap))) if cap else n


def build_instances(config: ExperimentConfig) -> list:
    family = config.family_obj()
    return [gen_instance(config.depth, config.arity, family, config.theta, s) for s in config.seeds()]


def run_experiment(config: ExperimentConfig, instances=None) -> list:
    """All trial records of ``config``, sorted; identical whatever the worker count."""
    family = config.family_obj()
    if instances is None:
        instances = build_instances(config)
    chash = config.config_hash()
    items = []
    for inst, (tree, means) in enumerate(instances):
        d_root = optimal_allocation(tree, means, config.theta, family).d_root
        for sampler in config.samplers:
            for didx, delta in enumerate(config.deltas):
                for trial in range(config.trials):
                    items.append((chash, inst, tree, means, config.theta, family, delta, didx, sampler,
                                  trial, config.master_seed, config.engine, config.max_rounds, d_root))
    workers = config.workers or default_workers()
    if workers <= 1 or len(items) <= 1:
        records = [_work(it) for it in items]
    else:
        with get_context("fork").Pool(workers) as pool:
            records = pool.map(_work, items, chunksize=max(1, len(items) // (8 * workers)))
    records.sort(key=TrialRecord.key)
    return records


def write_records(records, path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r)) + "\n")


def read_records(path) -> list:
    with open(path) as fh:
        return [TrialRecord(**json.loads(line)) for line in fh if line.strip()]


# -- summaries -----------------------------------------------------------------

@dataclass
class SummaryRow:
    sampler: str
    delta: float
    depth: int
    mean_tau: float
    std_tau: float
    mean_ratio: float
    std_ratio: float
    errors: int
    trials: int


def _mean_std(xs):
    if not xs:
        return math.nan, math.nan
    arr = np.asarray(xs, dtype=float)
    return float(arr.mean()), float(arr.std(ddof=1)) if len(arr) > 1 else 0.0


def summarize(records) -> list:
    """One row per (sampler, delta, depth). Capped trials count as errors and are left out of the means."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.sampler, r.delta, r.depth), []).append(r)
    rows = []
    for (sampler, delta, depth), rs in groups.items():
        done = [r for r in rs if not r.capped]
        mt, st = _mean_std([r.tau for r in done])
        mr, sr = _mean_std([r.ratio for r in done])
        errors = sum(1 for r in rs if not r.correct)
        rows.append(SummaryRow(sampler, delta, depth, mt, st, mr, sr, errors, len(rs)))
    order = {s: i for i, s in enumerate(SAMPLERS)}
    rows.sort(key=lambda r: (order.get(r.sampler, len(order)), r.depth, -r.delta))
    return rows


def emit_csv(rows, path) -> None:
    if rows and isinstance(rows[0], TrialRecord):
        rows = summarize(rows)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in rows:
                w.writerow([r.sampler, repr(r.delta), r.depth, repr(r.mean_tau), repr(r.std_tau),
                            repr(r.mean_ratio), repr(r.std_ratio), r.errors, r.trials])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [SummaryRow(r["sampler"], float(r["delta"]), int(r["depth"]), float(r["mean_tau"]),
                           float(r["std_tau"]), float(r["mean_ratio"]), float(r["std_ratio"]),
                           int(r["errors"]), int(r["trials"])) for r in reader]


def emit_plotdata(rows, path) -> Path:
    """Gnuplot data (one index block per sampler) plus a ``.gp`` script next to it."""
    path = Path(path)
    series: dict = {}
    for r in rows:
        series.setdefault(r.sampler, []).append(r)
    try:
        with open(path, "w") as fh:
            for k, (sampler, rs) in enumerate(series.items()):
                if k:
                    fh.write("\n\n")
                fh.write(f"# {sampler}\n# ln(1/delta) mean_ratio std_ratio\n")
                for r in sorted(rs, key=lambda r: -r.delta):
                    fh.write(f"{math.log(1.0 / r.delta)!r} {r.mean_ratio!r} {r.std_ratio!r}\n")
        script = path.with_suffix(".gp")
        plots = ", \\\n     ".join(
            f"'{path.name}' index {k} using 1:2:3 with yerrorlines title '{s}'" for k, s in enumerate(series)
        )
        script.write_text(
            "set xlabel 'ln(1/delta)'\nset ylabel 'stopping time / lower bound'\n"
            "set key top right\n"
            f"set terminal pngcairo size 800,600\nset output '{path.stem}.png'\n"
            f"plot {plots}\n"
        )
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return script


def plot_series_count(path) -> int:
    text = Path(path).read_text()
    return len([b for b in text.split("\n\n\n") if b.strip()])


# -- engine benchmark ------------------------------------------------------------

@dataclass
class BenchPoint:
    depth: int
    fast_us: float      # mean microseconds per round
    naive_us: float


def _bench_engine(eng, rewards, fast: bool) -> float:
    """Mean microseconds per round (select, update, stop statistic), collector paused."""
    state = eng.state
    enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter()
        for r in rewards:
            t = state.t + 1
            if fast:
                leaf = eng.select(t)
            else:
                leaf = select_forced(state.counts, t)
                if leaf is None:
                    leaf = select_rd(state.counts, eng.weights())
            eng.update(leaf, r)
            eng.stop_stat()
        elapsed = time.perf_counter() - start
    finally:
        if enabled:
            gc.enable()
    return elapsed / len(rewards) * 1e6


def benchmark_engines(depths=range(6, 15), fast_rounds=1000, naive_rounds=10, repeats=15, seed=0) -> list:
    """Per-round cost of both engines on complete binary trees, best of ``repeats``.

    Depths are interleaved inside every repeat so slow drift of the machine
    hits all of them alike; each repeat replays the same rewards.
    """
    family = Bernoulli()
    setups = []
    for depth in depths:
        tree = complete_tree(depth, 2, MAX)
        rng = np.random.default_rng([seed, depth])
        means = rng.uniform(0.05, 0.95, tree.n_leaves)
        sums = rng.binomial(4, means).astype(float)
        rewards = (rng.random(max(fast_rounds, naive_rounds)) < 0.5).astype(float).tolist()
        setups.append((depth, tree, sums, rewards))
    best = {d: [math.inf, math.inf] for d, *_ in setups}
    for _ in range(repeats):
        for depth, tree, sums, rewards in setups:
            counts = np.full(tree.n_leaves, 4)
            fe = IncrementalEngine(tree, EmpiricalState(counts, sums), 0.5, family)
            best[depth][0] = min(best[depth][0], _bench_engine(fe, rewards[:fast_rounds], True))
            ne = NaiveEngine(tree, EmpiricalState(counts, sums), 0.5, family)
            best[depth][1] = min(best[depth][1], _bench_engine(ne, rewards[:naive_rounds], False))
    return [BenchPoint(d, *best[d]) for d, *_ in setups]


def affine_fit(xs, ys) -> tuple:
    """Least-squares line through (xs, ys): (slope, intercept, R^2)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
