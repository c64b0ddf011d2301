"""GLR statistic for the threshold question, the stopping threshold and the stop test."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .tree import MAX, MIN, Answer, GameTree, node_values

LN_PI2_3 = math.log(math.pi ** 2 / 3.0)
INV_LN_1_5 = 1.0 / math.log(1.5)
LNLN_1_5 = math.log(math.log(1.5))


@dataclass
class EmpiricalState:
    """Per-leaf pull counts and reward sums; ``means`` is always ``sums / counts``.

    Keeping sums rather than a running mean makes a Bernoulli estimate land
    exactly on a rational threshold when it should.
    """

    counts: np.ndarray
    sums: np.ndarray
    t: int = field(init=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64).copy()
        self.sums = np.asarray(self.sums, dtype=float).copy()
        if self.counts.shape != self.sums.shape:
            raise ValueError("counts and sums must have the same length")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")
        self.t = int(self.counts.sum())

    @classmethod
    def empty(cls, n_leaves: int) -> "EmpiricalState":
        return cls(np.zeros(n_leaves, dtype=np.int64), np.zeros(n_leaves))

    @classmethod
    def from_means(cls, counts, means) -> "EmpiricalState":
        counts = np.asarray(counts, dtype=np.int64)
        return cls(counts, counts * np.asarray(means, dtype=float))

    @property
    def n_leaves(self) -> int:
        return len(self.counts)

    @property
    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.sums / self.counts

    def mean(self, leaf: int) -> float:
        return float(self.sums[leaf]) / int(self.counts[leaf])

    def add(self, leaf: int, reward: float) -> None:
        self.counts[leaf] += 1
        self.sums[leaf] += reward
        self.t += 1

    def check_initialized(self) -> None:
        if np.any(self.counts < 1):
            raise DomainError("every leaf must be drawn at least once")

    def copy(self) -> "EmpiricalState":
        return EmpiricalState(self.counts, self.sums)


def state_arrays(state):
    if isinstance(state, EmpiricalState):
        return state.counts, state.means
    counts, means = state
    return np.asarray(counts), np.asarray(means, dtype=float)


def glr_nodes(tree: GameTree, counts, means, theta: float, family, win: bool | None = None) -> list:
    """Z_s for every node under the root's empirical answer (or the one forced by ``win``).

    Win recursion: leaf N d(mu, theta) on the winning side else 0; MAX sums, MIN
    takes the minimum. The Lose recursion swaps the roles of MAX and MIN.
    """
    leaf_kl = [family.kl(float(m), theta) for m in means]
    return glr_from_divergences(tree, counts, means, theta, leaf_kl, win)


def glr_from_divergences(tree: GameTree, counts, means, theta: float, leaf_kl, win: bool | None = None) -> list:
    children, labels, leaf_index = tree.children, tree.labels, tree.leaf_index
    if win is None:
        win = _root_value(tree, means) >= theta
    add_label = MAX if win else MIN
    z = [0.0] * tree.n_nodes
    for s in tree.postorder:
        ch = children[s]
        if not ch:
            i = leaf_index[s]
            m = means[i]
            if (m >= theta) if win else (m < theta):
                z[s] = int(counts[i]) * leaf_kl[i]
        elif labels[s] == add_label:
            z[s] = sum(z[c] for c in ch)
        else:
            z[s] = min(z[c] for c in ch)
    return z


def _root_value(tree, means) -> float:
    return node_values(tree, means)[tree.root]


def glr(tree: GameTree, state, theta: float, family) -> float:
    """Z_{s0}(t) for the current empirical state."""
    counts, means = state_arrays(state)
    return glr_nodes(tree, counts, means, theta, family)[tree.root]


def empirical_answer(tree: GameTree, state, theta: float) -> Answer:
    _, means = state_arrays(state)
    return Answer.WIN if _root_value(tree, means) >= theta else Answer.LOSE


# -- threshold ------------------------------------------------------------

def h(x: float) -> float:
    if x < 1.0:
        raise DomainError(f"h is used on [1, inf), got {x}")
    return x - math.log(x)


H_BRANCH = h(INV_LN_1_5)


def h_inverse(y: float) -> float:
    """Inverse of h on the branch x >= 1, by Newton's method kept inside a bracket."""
    if not y >= 1.0 or math.isinf(y):
        raise DomainError(f"h_inverse needs a finite y >= 1, got {y}")
    if y == 1.0:
        return 1.0
    lo = y
    hi = y + math.log(y + math.sqrt(2.0 * (y - 1.0))) + 1.0
    x = y + math.log(y)
    for _ in range(100):
        f = x - math.log(x) - y
        if f > 0.0:
            hi = min(hi, x)
        else:
            lo = max(lo, x)
        step = f / (1.0 - 1.0 / x)
        nxt = x - step
        if not lo <= nxt <= hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 1e-15 * x:
            return nxt
        x = nxt
    return x


def h_tilde(x: float) -> float:
    if x >= H_BRANCH:
        hi = h_inverse(x)
        return math.exp(1.0 / hi) * hi
    return 1.5 * (x - LNLN_1_5)


def c_exp(x: float) -> float:
    if x < 0.0:
        raise DomainError(f"c_exp needs x >= 0, got {x}")
    return 2.0 * h_tilde((h_inverse(1.0 + x) + LN_PI2_3) / 2.0)


@dataclass(frozen=True)
class ThresholdParams:
    delta: float
    n_leaves: int

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.n_leaves < 1:
            raise ValueError("need at least one leaf")

    @property
    def constant(self) -> float:
        """The count-independent part |L| c_exp(ln(1/delta) / |L|)."""
        return _constant_term(self.delta, self.n_leaves)


_CONST_CACHE: dict = {}


def _constant_term(delta: float, n_leaves: int) -> float:
    key = (delta, n_leaves)
    val = _CONST_CACHE.get(key)
    if val is None:
        val = n_leaves * c_exp(math.log(1.0 / delta) / n_leaves)
        _CONST_CACHE[key] = val
    return val


def loglog_term(n: int) -> float:
    return math.log(1.0 + math.log(n))


def beta(counts, params: ThresholdParams) -> float:
    counts = np.asarray(counts if not isinstance(counts, EmpiricalState) else counts.counts)
    if np.any(counts < 1):
        raise DomainError("beta needs every count >= 1")
    return 3.0 * float(np.log1p(np.log(counts.astype(float))).sum()) + params.constant


class BetaTracker:
    """beta(t, delta) maintained in O(1) per pull."""

    def __init__(self, counts, params: ThresholdParams):
        counts = [int(c) for c in counts]
        if min(counts) < 1:
            raise DomainError("beta needs every count >= 1")
        self.params = params
        self._const = params.constant
        self._terms = [loglog_term(c) for c in counts]
        self._sum = math.fsum(self._terms)
        self._updates = 0

    def update(self, leaf: int, new_count: int) -> None:
        new = loglog_term(new_count)
        self._sum += new - self._terms[leaf]
        self._terms[leaf] = new
        self._updates += 1
        if self._updates & 0xFFFF == 0:
            self._sum = math.fsum(self._terms)

    @property
    def value(self) -> float:
        return 3.0 * self._sum + self._const


def should_stop(tree: GameTree, state, theta: float, family, params: ThresholdParams) -> bool:
    counts, _ = state_arrays(state)
    return glr(tree, state, theta, family) >= beta(counts, params)
