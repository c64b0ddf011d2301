"""Good action identification: return a root child worth at least the threshold, or none.

The stop statistic is the largest per-child GLR when the root looks winning
(one good child has to be certified, not the whole root), and the ordinary
root GLR otherwise. Sampling is unchanged RD-Tracking.
"""
from __future__ import annotations

from dataclasses import dataclass

from .glr import glr_nodes, state_arrays
from .sampling import RunResult, run
from .tree import MAX, GameTree, node_values


@dataclass(frozen=True)
class GaiAnswer:
    child: int | None = None

    @property
    def no_good_action(self) -> bool:
        return self.child is None

    def __str__(self):
        return "no-good-action" if self.child is None else f"child:{self.child}"


NO_GOOD_ACTION = GaiAnswer(None)


def _check_root(tree: GameTree) -> None:
    if tree.labels[tree.root] != MAX:
        raise ValueError("good action identification needs a MAX root")


def child_glrs(tree: GameTree, state, theta: float, family) -> dict:
    """Z_c under the win recursion for every root child c."""
    counts, means = state_arrays(state)
    z = glr_nodes(tree, counts, means, theta, family, win=True)
    return {c: z[c] for c in tree.children[tree.root]}


def glr_gai(tree: GameTree, state, theta: float, family) -> float:
    _check_root(tree)
    counts, means = state_arrays(state)
    vals = node_values(tree, means)
    if vals[tree.root] >= theta:
        z = glr_nodes(tree, counts, means, theta, family, win=True)
        return max(z[c] for c in tree.children[tree.root])
    return glr_nodes(tree, counts, means, theta, family, win=False)[tree.root]


def recommend_gai(tree: GameTree, state, theta: float, family) -> GaiAnswer:
    """Empirically good child with the largest GLR (lowest child on ties), else no good action."""
    _check_root(tree)
    counts, means = state_arrays(state)
    vals = node_values(tree, means)
    good = [c for c in tree.children[tree.root] if vals[c] >= theta]
    if not good:
        return NO_GOOD_ACTION
    z = glr_nodes(tree, counts, means, theta, family, win=True)
    best = good[0]
    for c in good[1:]:
        if z[c] > z[best]:
            best = c
    return GaiAnswer(best)


def gai_correct(tree: GameTree, means, theta: float, rec: GaiAnswer) -> bool:
    vals = node_values(tree, means)
    if rec.no_good_action:
        return all(vals[c] < theta for c in tree.children[tree.root])
    return vals[rec.child] >= theta


def run_gai(tree: GameTree, means, theta: float, family, delta: float, seed=0, **kw) -> RunResult:
    """RD-Tracking with the good-action stop statistic and recommendation."""
    _check_root(tree)
    res = run(
        tree, means, theta, family, delta, "rd", seed,
        statistic=lambda st: glr_gai(tree, st, theta, family),
        recommend=lambda st: recommend_gai(tree, st, theta, family),
        **kw,
    )
    res.correct = gai_correct(tree, means, theta, res.recommendation)
    res.sampler = "gai"
    return res
