"""Track-and-Stop run loop with RD, D, C and round-robin sampling.

Rounds are numbered by ``t = (total pulls so far) + 1``: the first round after
the initial pull of every leaf is ``t = |L| + 1``. Every leaf draws its
rewards from its own seeded stream, so two samplers run on the same seed see
the same k-th reward of each leaf.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .allocation import ROOT_TIE_TOL, means_root_value, plugin_allocation
from .engine import DEFAULT_REFRESH, IncrementalEngine, NaiveEngine
from .errors import AssumptionViolated, DomainError, RoundCapExceeded
from .glr import BetaTracker, EmpiricalState, ThresholdParams, glr
from .rewards import RewardStream
from .tree import Answer, GameTree, answer

DEFAULT_CAP = 10**9
TIE_TOL = 1e-9


class SamplerKind(str, Enum):
    RD = "rd"
    D = "d"
    C = "c"
    RR = "rr"


class EngineMismatch(AssertionError):
    """The incremental engine disagreed with the naive recursion beyond tolerance."""


@dataclass
class RunResult:
    tau: int
    recommendation: object          # Answer, or a GaiAnswer for GAI runs
    correct: bool
    counts: list
    wall_time: float
    sampler: str
    seed: object = None
    trace: list | None = None       # leaf pulled in each post-init round
    stats: list | None = None       # (Z, beta) after each post-init round
    near_ties: int = 0

    @property
    def stopping_time(self) -> int:
        return self.tau


# -- selection rules (pure functions of counts and weights) ---------------

def forced_threshold(t: int, n_leaves: int) -> float:
    return math.sqrt(t) - n_leaves / 2.0


def select_forced(counts, t: int):
    """Least-pulled leaf when some count is below sqrt(t) - |L|/2, else None."""
    counts = np.asarray(counts)
    i = int(np.argmin(counts))
    return i if counts[i] < forced_threshold(t, len(counts)) else None


def select_rd(counts, w) -> int:
    return int(np.argmax(np.asarray(w, dtype=float) / np.asarray(counts, dtype=float)))


def select_d(counts, w, t: int) -> int:
    return int(np.argmax(t * np.asarray(w, dtype=float) - np.asarray(counts, dtype=float)))


def select_c(counts, cumulative_w) -> int:
    return int(np.argmax(np.asarray(cumulative_w, dtype=float) - np.asarray(counts, dtype=float)))


def c_floor(t: int, n_leaves: int) -> float:
    return 0.5 / math.sqrt(n_leaves * n_leaves + t)


def project_floor(w, eps: float) -> np.ndarray:
    """Sup-norm projection of ``w`` onto the simplex entries >= ``eps``.

    The projection lowers the large weights by a common amount and raises the
    small ones to the floor: ``v = max(w - eta, eps)`` with ``eta`` fixing the sum.
    """
    w = np.asarray(w, dtype=float)
    n = len(w)
    if eps * n > 1.0 + 1e-12:
        raise DomainError(f"floor {eps} infeasible for {n} leaves")
    if np.all(w >= eps):
        return w.copy()
    order = np.sort(w)[::-1]
    prefix = np.cumsum(order)
    eta = 0.0
    for k in range(1, n + 1):
        eta = (prefix[k - 1] - 1.0 + (n - k) * eps) / k
        nxt = order[k] - eta if k < n else -math.inf
        if order[k - 1] - eta > eps >= nxt:
            break
    return np.maximum(w - eta, eps)


def check_instance(tree: GameTree, means, theta: float, family) -> None:
    if len(means) != tree.n_leaves:
        raise ValueError(f"expected {tree.n_leaves} means, got {len(means)}")
    if not family.in_interior(theta):
        raise DomainError(f"threshold {theta} must lie in the interior of the mean domain")
    for m in means:
        family.check_mean(float(m))
    v = means_root_value(tree, means)
    if abs(v - theta) <= ROOT_TIE_TOL:
        raise AssumptionViolated(f"root value {v} equals the threshold {theta}")


# -- the run loop -----------------------------------------------------------

def initial_state(tree: GameTree, stream: RewardStream) -> EmpiricalState:
    state = EmpiricalState.empty(tree.n_leaves)
    for leaf in range(tree.n_leaves):
        state.add(leaf, stream.draw(leaf))
    return state


def run(tree: GameTree, means, theta: float, family, delta: float, sampler="rd", seed=0,
        engine: str = "naive", *, max_rounds: int = DEFAULT_CAP, record: bool = False,
        paranoid: bool = False, refresh_interval: int | None = DEFAULT_REFRESH,
        horizon: int | None = None, statistic: Callable | None = None,
        recommend: Callable | None = None, check: bool = True) -> RunResult:
    """One Track-and-Stop run.

    ``statistic(state)``/``recommend(state)`` replace the GLR stop statistic and
    the recommendation (used by the good-action variant). With ``horizon`` set
    the stop test is skipped and the run lasts exactly ``horizon`` pulls.
    ``paranoid`` cross-checks the fast engine against the naive recursion
    every round and raises EngineMismatch on a disagreement that is not a
    floating-point near tie.
    """
    sampler = SamplerKind(sampler)
    if engine not in ("naive", "fast"):
        raise ValueError(f"unknown engine {engine!r}")
    if check:
        check_instance(tree, means, theta, family)
    params = ThresholdParams(delta, tree.n_leaves)
    start = time.perf_counter()
    stream = RewardStream(family, means, seed)
    state = initial_state(tree, stream)
    n_leaves = tree.n_leaves
    bt = BetaTracker(state.counts, params)
    if engine == "fast":
        eng = IncrementalEngine(tree, state, theta, family, refresh_interval)
    else:
        eng = NaiveEngine(tree, state, theta, family)
    fast = engine == "fast"
    cum = state.counts.astype(float) if sampler is SamplerKind.C else None
    trace = [] if record else None
    stats = [] if record else None
    near_ties = 0
    limit = min(max_rounds, horizon) if horizon is not None else max_rounds
    rec = None

    while True:
        t = state.t + 1
        if state.t >= limit:
            if horizon is not None:
                break
            raise RoundCapExceeded(max_rounds)
        counts = state.counts
        if sampler is SamplerKind.RR:
            leaf = (t - 1) % n_leaves
        elif fast and sampler is SamplerKind.RD:
            leaf = eng.select(t)
            if paranoid:
                naive_leaf = _naive_rd(tree, state, theta, family, t)
                if naive_leaf != leaf:
                    _check_near_tie(tree, state, theta, family, leaf, naive_leaf)
                    near_ties += 1
        else:
            leaf = select_forced(counts, t) if sampler is not SamplerKind.C else None
            if leaf is None:
                w = plugin_allocation(tree, state.means, theta, family).w if fast else eng.weights()
                if sampler is SamplerKind.RD:
                    leaf = select_rd(counts, w)
                elif sampler is SamplerKind.D:
                    leaf = select_d(counts, w, t)
                else:
                    cum += project_floor(w, c_floor(t, n_leaves))
                    leaf = select_c(counts, cum)

        eng.update(leaf, stream.draw(leaf))
        bt.update(leaf, int(state.counts[leaf]))
        b = bt.value

        if statistic is not None:
            z = statistic(state)
        else:
            z = abs(eng.stop_stat())
            if paranoid and fast:
                zn = glr(tree, state, theta, family)
                if abs(z - zn) > 1e-8 * max(1.0, zn):
                    raise EngineMismatch(f"round {t}: fast Z {z} vs naive Z {zn}")
                eng.check_heaps()
        if record:
            trace.append(leaf)
            stats.append((z, b))
        if horizon is None and z >= b:
            rec = recommend(state) if recommend is not None else eng.answer()
            break

    truth = answer(tree, tree.root, means, theta)
    correct = rec == truth if isinstance(rec, Answer) else False
    return RunResult(
        tau=state.t, recommendation=rec, correct=bool(correct), counts=state.counts.tolist(),
        wall_time=time.perf_counter() - start, sampler=sampler.value, seed=seed,
        trace=trace, stats=stats, near_ties=near_ties,
    )


def run_roundrobin(tree, means, theta, family, delta, seed=0, **kw) -> RunResult:
    return run(tree, means, theta, family, delta, SamplerKind.RR, seed, **kw)


def _naive_rd(tree, state, theta, family, t) -> int:
    leaf = select_forced(state.counts, t)
    if leaf is None:
        leaf = select_rd(state.counts, plugin_allocation(tree, state.means, theta, family).w)
    return leaf


def _check_near_tie(tree, state, theta, family, a: int, b: int) -> None:
    w = plugin_allocation(tree, state.means, theta, family).w
    ra, rb = w[a] / state.counts[a], w[b] / state.counts[b]
    if abs(ra - rb) > TIE_TOL * max(abs(ra), abs(rb)):
        raise EngineMismatch(f"fast engine picked leaf {a} (ratio {ra}), naive picked {b} (ratio {rb})")


# -- scripted scenarios with frozen estimates ---------------------------------

@dataclass
class ScriptedRun:
    picks: list = field(default_factory=list)
    counts: list = field(default_factory=list)


def scripted_tracking(w, start_counts, rounds: int, rule: str = "rd", forced: bool = True) -> ScriptedRun:
    """Selections of the RD or D rule when the plug-in weights stay fixed at ``w``.

    No rewards are drawn: the estimates are assumed to have converged, so the
    allocation never changes and only the counts move.
    """
    w = np.asarray(w, dtype=float)
    counts = np.asarray(start_counts, dtype=np.int64).copy()
    out = ScriptedRun()
    for _ in range(rounds):
        t = int(counts.sum()) + 1
        leaf = select_forced(counts, t) if forced else None
        if leaf is None:
            leaf = select_rd(counts, w) if rule == "rd" else select_d(counts, w, t)
        counts[leaf] += 1
        out.picks.append(leaf)
    out.counts = counts.tolist()
    return out
