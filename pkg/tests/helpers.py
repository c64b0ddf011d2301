"""Shared random-instance builders and brute-force oracles for the test suite."""
from itertools import product

import numpy as np
from hypothesis import strategies as st

from tmcts.glr import EmpiricalState
from tmcts.rewards import Bernoulli, Gaussian
from tmcts.tree import MAX, MIN, from_nested, node_values

BERN = Bernoulli()
GAUSS = Gaussian(1.0)


def random_nested(rng, max_depth, max_arity, depth=0):
    """Nested-list tree with random shape and random (not alternating) labels."""
    if depth == max_depth or (depth > 0 and rng.random() < 0.3):
        return 0
    k = int(rng.integers(1, max_arity + 1))
    label = MAX if rng.random() < 0.5 else MIN
    return (label, [random_nested(rng, max_depth, max_arity, depth + 1) for _ in range(k)])


def random_tree(rng, max_depth=3, max_arity=3):
    return from_nested(random_nested(rng, max_depth, max_arity))


def random_means(rng, tree, family, theta=0.5):
    if isinstance(family, Bernoulli):
        return [float(x) for x in rng.uniform(0.02, 0.98, tree.n_leaves)]
    return [float(x) for x in theta + rng.standard_normal(tree.n_leaves)]


def random_instance(rng, family, theta=0.5, max_depth=3, max_arity=3, gap=1e-6):
    """Random tree and means whose root value stays clear of theta."""
    while True:
        tree = random_tree(rng, max_depth, max_arity)
        means = random_means(rng, tree, family, theta)
        if abs(node_values(tree, means)[tree.root] - theta) > gap:
            return tree, means


def random_state(rng, tree, family, theta=0.5, max_count=50):
    counts = rng.integers(1, max_count + 1, tree.n_leaves)
    if isinstance(family, Bernoulli):
        sums = rng.binomial(counts, rng.uniform(0.05, 0.95, tree.n_leaves)).astype(float)
    else:
        sums = counts * (theta + rng.standard_normal(tree.n_leaves))
    return EmpiricalState(counts, sums)


@st.composite
def trees(draw, max_depth=3, max_arity=3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_tree(np.random.default_rng(seed), max_depth, max_arity)


@st.composite
def instances(draw, family=BERN, max_depth=3, max_arity=3):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_instance(np.random.default_rng(seed), family, max_depth=max_depth, max_arity=max_arity)


def brute_flipping_sets(tree, means, theta):
    """Every subset of answer-side leaves whose move onto the threshold flips the root."""
    means = list(means)
    win = node_values(tree, means)[tree.root] >= theta
    side = [i for i, m in enumerate(means) if (m >= theta) == win]
    below = np.nextafter(theta, -np.inf)
    out = []
    for mask in product((0, 1), repeat=len(side)):
        moved = list(means)
        chosen = [i for bit, i in zip(mask, side) if bit]
        for i in chosen:
            moved[i] = below if win else theta
        if (node_values(tree, moved)[tree.root] >= theta) != win:
            out.append(chosen)
    return out


def brute_alt_infimum(tree, means, theta, family, w):
    """Cheapest set of leaves to drag onto the threshold so that the root answer flips.

    Enumerates every subset of the leaves on the current answer's side. A Win
    leaf is pushed just below theta, a Lose leaf exactly onto theta (ties are Win).
    """
    means = list(means)
    win = node_values(tree, means)[tree.root] >= theta
    side = [i for i, m in enumerate(means) if (m >= theta) == win]
    kls = [family.kl(m, theta) for m in means]
    below = np.nextafter(theta, -np.inf)
    best = np.inf
    for mask in product((0, 1), repeat=len(side)):
        moved = list(means)
        cost = 0.0
        for bit, i in zip(mask, side):
            if bit:
                moved[i] = below if win else theta
                cost += w[i] * kls[i]
        if (node_values(tree, moved)[tree.root] >= theta) != win:
            best = min(best, cost)
    return best
