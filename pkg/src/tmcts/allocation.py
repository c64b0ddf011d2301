"""Optimal sampling proportions over the leaves and the matching difficulty d_{s0}.

``optimal_allocation`` runs the bottom-up/top-down recursion (max at nodes
where the answer is decided by one child, harmonic combination where every
child must be refuted). ``alt_infimum`` evaluates the inner infimum for an
arbitrary weight vector by enumerating flipping leaf sets; it shares no code
with the recursion and serves as its oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .errors import AssumptionViolated, DomainError
from .tree import MAX, MIN, Answer, GameTree, node_values

ROOT_TIE_TOL = 1e-9


@dataclass
class Allocation:
    d: list            # d_s per node id
    w: np.ndarray      # optimal proportions, leaf-index order
    answer: Answer
    d_root: float


def _leaf_divergences(tree, means, theta, family) -> list:
    return [family.kl(float(m), theta) for m in means]


def allocation_from_divergences(tree: GameTree, means, theta: float, leaf_kl: Sequence[float],
                                win: bool | None = None):
    """Core recursion given precomputed ``d(mu_l, theta)`` per leaf.

    Returns ``(answer, d, w)``. Zero-difficulty subtrees that still receive mass
    spread it uniformly over their leaves. ``win`` may be passed when the root
    answer is already known.
    """
    children, labels, leaf_index = tree.children, tree.labels, tree.leaf_index
    n = tree.n_nodes
    if win is None:
        win = means_root_value(tree, means) >= theta
    pick = MAX if win else MIN          # label whose value follows a single child
    d = [0.0] * n
    for s in tree.postorder:
        ch = children[s]
        if not ch:
            i = leaf_index[s]
            on_side = (means[i] >= theta) if win else (means[i] < theta)
            d[s] = leaf_kl[i] if on_side else 0.0
        elif labels[s] == pick:
            d[s] = max(d[c] for c in ch)
        else:
            inv = 0.0
            for c in ch:
                dc = d[c]
                if dc <= 0.0:
                    inv = math.inf
                    break
                inv += 1.0 / dc
            d[s] = 0.0 if inv == math.inf else 1.0 / inv

    w = np.zeros(tree.n_leaves)
    stack = [(tree.root, 1.0)]
    span = tree.leaf_span
    while stack:
        s, mass = stack.pop()
        ch = children[s]
        if not ch:
            w[leaf_index[s]] += mass
        elif d[s] <= 0.0:
            lo, hi = span[s]
            w[lo:hi] += mass / (hi - lo)
        elif labels[s] == pick:
            best = ch[0]
            for c in ch[1:]:
                if d[c] > d[best]:
                    best = c
            stack.append((best, mass))
        else:
            inv = sum(1.0 / d[c] for c in ch)
            for c in ch:
                stack.append((c, mass * (1.0 / d[c]) / inv))
    return (Answer.WIN if win else Answer.LOSE), d, w


def means_root_value(tree: GameTree, means) -> float:
    return node_values(tree, means)[tree.root]


def _check_inputs(tree, means, theta, family):
    if len(means) != tree.n_leaves:
        raise ValueError(f"expected {tree.n_leaves} means, got {len(means)}")
    if not family.in_interior(theta):
        raise DomainError(f"threshold {theta} must lie in the interior of the mean domain")
    for m in means:
        family.check_mean(float(m))


def optimal_allocation(tree: GameTree, means, theta: float, family) -> Allocation:
    """Difficulty ``d_s`` for every node and the optimal leaf proportions ``w``.

    Raises AssumptionViolated when the root value sits at the threshold.
    """
    _check_inputs(tree, means, theta, family)
    root_val = means_root_value(tree, means)
    if abs(root_val - theta) <= ROOT_TIE_TOL:
        raise AssumptionViolated(f"root value {root_val} equals the threshold {theta}")
    ans, d, w = allocation_from_divergences(tree, means, theta, _leaf_divergences(tree, means, theta, family))
    return Allocation(d=d, w=w, answer=ans, d_root=d[tree.root])


def plugin_allocation(tree: GameTree, means, theta: float, family) -> Allocation:
    """Same recursion without the assumption checks, for empirical means."""
    ans, d, w = allocation_from_divergences(tree, means, theta, _leaf_divergences(tree, means, theta, family))
    return Allocation(d=d, w=w, answer=ans, d_root=d[tree.root])


# -- oracle -------------------------------------------------------------

def flipping_sets(tree: GameTree, means, theta: float) -> list:
    """All leaf sets whose move onto the threshold flips the root answer.

    Only leaves on the current answer's side need moving; the family is closed
    under the tree's AND/OR structure (every child must flip at nodes whose
    answer needs all children, any child elsewhere). Duplicates are removed,
    supersets are kept since costs are nonnegative.
    """
    win = means_root_value(tree, means) >= theta
    # To flip a Win, MAX nodes need every child flipped; to flip a Lose, MIN nodes do.
    all_label = MAX if win else MIN
    fam = {}
    for s in tree.postorder:
        ch = tree.children[s]
        if not ch:
            i = tree.leaf_index[s]
            on_side = (means[i] >= theta) if win else (means[i] < theta)
            fam[s] = {frozenset([i])} if on_side else {frozenset()}
        elif tree.labels[s] == all_label:
            fam[s] = {frozenset().union(*combo) for combo in product(*(fam[c] for c in ch))}
        else:
            fam[s] = set().union(*(fam[c] for c in ch))
        for c in ch:
            del fam[c]
    return sorted((sorted(f) for f in fam[tree.root]), key=lambda f: (len(f), f))


def flipping_matrix(tree: GameTree, means, theta: float) -> np.ndarray:
    sets = flipping_sets(tree, means, theta)
    mat = np.zeros((len(sets), tree.n_leaves))
    for r, f in enumerate(sets):
        mat[r, f] = 1.0
    return mat


def alt_infimum(tree: GameTree, means, theta: float, family, w) -> float:
    """inf over the alternative set of sum_l w_l d(mu_l, lambda_l), by enumeration."""
    w = np.asarray(w, dtype=float)
    if w.shape != (tree.n_leaves,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("w must be a probability vector over the leaves")
    return float(alt_infimum_many(tree, means, theta, family, w[None, :])[0])


def alt_infimum_many(tree: GameTree, means, theta: float, family, weights) -> np.ndarray:
    """Vectorised ``alt_infimum`` for a (m, |L|) array of nonnegative weight rows."""
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    kls = np.array(_leaf_divergences(tree, means, theta, family))
    mat = flipping_matrix(tree, means, theta)
    costs = (weights * kls) @ mat.T
    return costs.min(axis=1)


def lower_bound_T(d_s0: float, delta: float) -> float:
    """ln(1/delta) / d_{s0}: asymptotic lower bound on the expected stopping time."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not d_s0 > 0.0:
        raise AssumptionViolated("zero difficulty: the lower bound is infinite")
    return math.log(1.0 / delta) / d_s0


def argmax_margin(tree: GameTree, means, theta: float, family) -> float:
    """Smallest gap between the best and runner-up child at every argmax step.

    A margin near zero means the optimal proportion is (nearly) non-unique.
    """
    _, d, _ = allocation_from_divergences(tree, means, theta, _leaf_divergences(tree, means, theta, family))
    win = means_root_value(tree, means) >= theta
    pick = MAX if win else MIN
    margin = math.inf
    for s in tree.postorder:
        ch = tree.children[s]
        if len(ch) < 2 or tree.labels[s] != pick or d[s] <= 0.0:
            continue
        top = sorted((d[c] for c in ch), reverse=True)
        margin = min(margin, top[0] - top[1])
    return margin
