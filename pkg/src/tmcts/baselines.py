"""Confidence-interval baselines adapted to the threshold question.

Both follow the best-arm template over the root's children (the root is a
MAX node) with zero tolerance, and answer the threshold question with the
same stop rule: win once the current best child's lower bound reaches the
threshold, lose once every child's upper bound is below it.

Leaf intervals are ``mu_hat +- sqrt(2 sigma^2 beta(N, delta) / N)`` where
``beta(N, delta)`` is the stopping threshold evaluated with every count at N;
for Bernoulli rewards (sigma^2 = 1/4) this is ``sqrt(beta / (2N))``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import RoundCapExceeded
from .glr import ThresholdParams
from .rewards import RewardStream
from .sampling import DEFAULT_CAP, RunResult, check_instance, initial_state
from .tree import MAX, Answer, GameTree, answer, node_values


@dataclass
class NodeIntervals:
    lcb: np.ndarray     # per node id
    ucb: np.ndarray


def leaf_radius(counts, params: ThresholdParams, family) -> np.ndarray:
    n = np.asarray(counts, dtype=float)
    b = params.n_leaves * 3.0 * np.log1p(np.log(n)) + params.constant
    return np.sqrt(2.0 * family.subgaussian_variance * b / n)


def propagate_intervals(tree: GameTree, counts, means, params: ThresholdParams, family) -> NodeIntervals:
    """Leaf intervals pushed up the tree: MAX takes the max of both bounds, MIN the min."""
    rad = leaf_radius(counts, params, family)
    means = np.asarray(means, dtype=float)
    lo = np.empty(tree.n_nodes)
    hi = np.empty(tree.n_nodes)
    leaves = np.asarray(tree.leaves)
    lo[leaves] = means - rad
    hi[leaves] = means + rad
    for s in tree.postorder:
        ch = tree.children[s]
        if not ch:
            continue
        if tree.labels[s] == MAX:
            lo[s] = max(lo[c] for c in ch)
            hi[s] = max(hi[c] for c in ch)
        else:
            lo[s] = min(lo[c] for c in ch)
            hi[s] = min(hi[c] for c in ch)
    return NodeIntervals(lo, hi)


def _descend(tree: GameTree, s: int, iv: NodeIntervals, optimistic: bool) -> int:
    """Representative leaf below ``s``.

    Optimistic descent follows the largest upper bound at MAX nodes and the
    smallest lower bound at MIN nodes; the pessimistic one follows the largest
    lower bound at MAX nodes and the smallest lower bound at MIN nodes.
    """
    lo, hi = iv.lcb, iv.ucb
    while tree.children[s]:
        ch = tree.children[s]
        if tree.labels[s] == MAX:
            key = hi if optimistic else lo
            s = max(ch, key=lambda c: (key[c], -c))
        else:
            s = min(ch, key=lambda c: (lo[c], c))
    return tree.leaf_index[s]


def _stop(kids, best: int, iv: NodeIntervals, theta: float):
    if iv.lcb[best] >= theta:
        return Answer.WIN
    if all(iv.ucb[c] < theta for c in kids):
        return Answer.LOSE
    return None


def _ugape_pick(kids, iv: NodeIntervals):
    """(b, c): the child with the smallest gap index and its strongest challenger."""
    if len(kids) == 1:
        return kids[0], None
    hi = iv.ucb
    order = sorted(kids, key=lambda c: (-hi[c], c))
    top, second = order[0], order[1]
    b = min(kids, key=lambda c: ((hi[second] if c == top else hi[top]) - iv.lcb[c], c))
    c = max((k for k in kids if k != b), key=lambda k: (hi[k], -k))
    return b, c


def _run_ci(tree, means, theta, family, delta, seed, max_rounds, kind: str, on_round: Callable | None):
    if tree.labels[tree.root] != MAX:
        raise ValueError("the baselines expect a MAX root")
    check_instance(tree, means, theta, family)
    params = ThresholdParams(delta, tree.n_leaves)
    start = time.perf_counter()
    stream = RewardStream(family, means, seed)
    state = initial_state(tree, stream)
    kids = tree.children[tree.root]
    rec = None
    while True:
        iv = propagate_intervals(tree, state.counts, state.means, params, family)
        if on_round is not None:
            on_round(state, iv)
        if kind == "ugape":
            b, c = _ugape_pick(kids, iv)
        else:
            vals = node_values(tree, state.means)
            b = max(kids, key=lambda k: (vals[k], -k))
            rest = [k for k in kids if k != b]
            c = max(rest, key=lambda k: (iv.ucb[k], -k)) if rest else None
        rec = _stop(kids, b, iv, theta)
        if rec is not None:
            break
        if state.t >= max_rounds:
            raise RoundCapExceeded(max_rounds)
        if kind == "ugape":
            pick = b
            if c is not None and iv.ucb[c] - iv.lcb[c] > iv.ucb[b] - iv.lcb[b]:
                pick = c
            leaves = [_descend(tree, pick, iv, optimistic=True)]
        else:
            leaves = [_descend(tree, b, iv, optimistic=False)]
            if c is not None:
                leaves.append(_descend(tree, c, iv, optimistic=True))
        for leaf in leaves:
            state.add(leaf, stream.draw(leaf))
    truth = answer(tree, tree.root, means, theta)
    return RunResult(
        tau=state.t, recommendation=rec, correct=rec == truth, counts=state.counts.tolist(),
        wall_time=time.perf_counter() - start, sampler=kind, seed=seed,
    )


def run_ugape(tree, means, theta, family, delta, seed=0, *, max_rounds: int = DEFAULT_CAP,
              on_round: Callable | None = None) -> RunResult:
    """Gap-based baseline: sample the wider of the best child and its challenger."""
    return _run_ci(tree, means, theta, family, delta, seed, max_rounds, "ugape", on_round)


def run_lucb_micro(tree, means, theta, family, delta, seed=0, *, max_rounds: int = DEFAULT_CAP,
                   on_round: Callable | None = None) -> RunResult:
    """LUCB-style baseline: one pessimistic pull for the leader, one optimistic for the challenger."""
    return _run_ci(tree, means, theta, family, delta, seed, max_rounds, "lucb", on_round)
