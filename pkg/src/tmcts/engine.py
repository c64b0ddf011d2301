"""Incremental O(D log K) engine for RD-Tracking.

Every node keeps signed statistics whose sign encodes the node's empirical
answer (nonnegative means win):

* ``d`` the signed difficulty, ``z`` the signed GLR statistic,
* ``(rd_key, rd_leaf)`` the leaf that maximises w/N inside the subtree,
  stored as its key ``1/(N d)`` (``+inf`` when ``d == 0``).

Internal nodes aggregate their children with three indexed heaps (on ``d``,
``z`` and the RD pair) plus two running sums: the raw reciprocal sum over the
harmonic class and the sum of ``z`` over the additive class. A pull changes
one leaf, so only the path to the root is touched.
"""
from __future__ import annotations

import math

from .allocation import allocation_from_divergences
from .glr import EmpiricalState, glr_from_divergences
from .heap import IndexedHeap
from .tree import MAX, Answer, GameTree, node_values

INF = math.inf
DEFAULT_REFRESH = 1 << 20


def leaf_stats(mean: float, count: int, theta: float, family) -> tuple:
    """Signed (d, z, rd_key) of a leaf."""
    d = family.kl(mean, theta)
    if mean < theta:
        d = -d
    z = count * d
    return d, z, (1.0 / z if z != 0.0 else INF)


def reference_stats(tree: GameTree, counts, means, theta: float, family):
    """Signed statistics of every node straight from their definitions (test oracle).

    Returns lists ``d, z, rd_key, rd_leaf`` indexed by node id.
    """
    n = tree.n_nodes
    d, z, rk, rl = [0.0] * n, [0.0] * n, [0.0] * n, [0] * n
    for s in tree.postorder:
        ch = tree.children[s]
        if not ch:
            i = tree.leaf_index[s]
            d[s], z[s], rk[s] = leaf_stats(float(means[i]), int(counts[i]), theta, family)
            rl[s] = i
            continue
        if tree.labels[s] == MAX:
            if any(d[c] >= 0.0 for c in ch):
                best = max(ch, key=lambda c: (d[c], -ch.index(c)))
                d[s] = d[best]
                z[s] = sum(z[c] for c in ch if d[c] >= 0.0)
                rk[s], rl[s] = rk[best], rl[best]
            else:
                d[s] = 1.0 / sum(1.0 / d[c] for c in ch)
                z[s] = max(z[c] for c in ch)
                c = min(ch, key=lambda c: (rk[c], rl[c]))
                rk[s], rl[s] = rk[c], rl[c]
        else:
            if any(d[c] < 0.0 for c in ch):
                worst = min(ch, key=lambda c: (d[c], ch.index(c)))
                d[s] = d[worst]
                z[s] = sum(z[c] for c in ch if d[c] <= 0.0)
                rk[s], rl[s] = rk[worst], rl[worst]
            else:
                d[s] = 0.0 if any(d[c] == 0.0 for c in ch) else 1.0 / sum(1.0 / d[c] for c in ch)
                z[s] = min(z[c] for c in ch)
                c = min(ch, key=lambda c: (-rk[c], rl[c]))
                rk[s], rl[s] = rk[c], rl[c]
    return d, z, rk, rl


class IncrementalEngine:
    """Signed node statistics kept current under single-leaf updates."""

    def __init__(self, tree: GameTree, state: EmpiricalState, theta: float, family,
                 refresh_interval: int | None = DEFAULT_REFRESH):
        state.check_initialized()
        self.tree = tree
        self.state = state
        self.theta = theta
        self.family = family
        self.refresh_interval = refresh_interval
        self.updates = 0
        n = tree.n_nodes
        self._is_max = [lab == MAX for lab in tree.labels]
        self._parent = tree.parent
        self._slot = [0] * n            # position of a node among its siblings
        for s in range(n):
            for k, c in enumerate(tree.children[s]):
                self._slot[c] = k
        self._leaf_node = tree.leaves
        self.rebuild()

    # -- initialisation -------------------------------------------------
    def rebuild(self) -> None:
        """Recompute every statistic from the empirical state."""
        tree, theta, family = self.tree, self.theta, self.family
        n = tree.n_nodes
        counts, sums = self.state.counts, self.state.sums
        d, z, rk, rl = [0.0] * n, [0.0] * n, [0.0] * n, [0] * n
        self.d, self.z, self.rd_key, self.rd_leaf = d, z, rk, rl
        self.rsum = [0.0] * n       # raw reciprocal sum over the harmonic class
        self.rcomp = [0.0] * n      # its compensation term
        self.rcount = [0] * n       # members of the harmonic class
        self.zsum = [0.0] * n       # sum of z over the additive class
        self.zcomp = [0.0] * n
        self.zcount = [0] * n
        self.zeros = [0] * n        # MIN nodes: children with d == 0
        self.hd = [None] * n
        self.hz = [None] * n
        self.hr = [None] * n
        for s in tree.postorder:
            ch = tree.children[s]
            if not ch:
                i = tree.leaf_index[s]
                d[s], z[s], rk[s] = leaf_stats(float(sums[i]) / int(counts[i]), int(counts[i]), theta, family)
                rl[s] = i
                continue
            is_max = self._is_max[s]
            for c in ch:
                self._add_child(s, d[c], z[c])
            self.hd[s] = IndexedHeap([d[c] for c in ch], is_max=is_max)
            self.hz[s] = IndexedHeap([z[c] for c in ch], is_max=is_max)
            self.hr[s] = IndexedHeap([rk[c] for c in ch], [rl[c] for c in ch], is_max=not is_max)
            self._recompute(s)
        self.count_heap = IndexedHeap([int(c) for c in counts])

    # -- running sums ---------------------------------------------------
    def _acc_r(self, s: int, x: float) -> None:
        total = self.rsum[s]
        t = total + x
        if abs(total) >= abs(x):
            self.rcomp[s] += (total - t) + x
        else:
            self.rcomp[s] += (x - t) + total
        self.rsum[s] = t

    def _acc_z(self, s: int, x: float) -> None:
        total = self.zsum[s]
        t = total + x
        if abs(total) >= abs(x):
            self.zcomp[s] += (total - t) + x
        else:
            self.zcomp[s] += (x - t) + total
        self.zsum[s] = t

    def _add_child(self, s: int, dc: float, zc: float) -> None:
        if self._is_max[s]:
            harmonic = dc < 0.0
        else:
            harmonic = dc > 0.0
            if dc == 0.0:
                self.zeros[s] += 1
        if harmonic:
            self._acc_r(s, 1.0 / dc)
            self.rcount[s] += 1
        else:
            self._acc_z(s, zc)
            self.zcount[s] += 1

    def _remove_child(self, s: int, dc: float, zc: float) -> None:
        if self._is_max[s]:
            harmonic = dc < 0.0
        else:
            harmonic = dc > 0.0
            if dc == 0.0:
                self.zeros[s] -= 1
        if harmonic:
            self.rcount[s] -= 1
            if self.rcount[s] == 0:
                self.rsum[s] = self.rcomp[s] = 0.0
            else:
                self._acc_r(s, -1.0 / dc)
        else:
            self.zcount[s] -= 1
            if self.zcount[s] == 0:
                self.zsum[s] = self.zcomp[s] = 0.0
            else:
                self._acc_z(s, -zc)

    def _recompute(self, s: int) -> None:
        hd, child = self.hd[s], self.tree.children[s]
        dkey, dk = hd.peek()
        if self._is_max[s]:
            if dkey >= 0.0:
                self.d[s] = dkey
                self.z[s] = self.zsum[s] + self.zcomp[s]
                c = child[dk]
                self.rd_key[s], self.rd_leaf[s] = self.rd_key[c], self.rd_leaf[c]
            else:
                self.d[s] = 1.0 / (self.rsum[s] + self.rcomp[s])
                self.z[s] = self.hz[s].peek_key()
                self._take_rd_heap(s)
        else:
            if dkey < 0.0:
                self.d[s] = dkey
                self.z[s] = self.zsum[s] + self.zcomp[s]
                c = child[dk]
                self.rd_key[s], self.rd_leaf[s] = self.rd_key[c], self.rd_leaf[c]
            else:
                # +inf reciprocal sentinel: any zero child makes the harmonic value 0.
                self.d[s] = 0.0 if self.zeros[s] else 1.0 / (self.rsum[s] + self.rcomp[s])
                self.z[s] = self.hz[s].peek_key()
                self._take_rd_heap(s)

    def _take_rd_heap(self, s: int) -> None:
        hr = self.hr[s]
        k = hr.peek_index()
        self.rd_key[s] = hr.keys[k]
        self.rd_leaf[s] = hr.ties[k]

    # -- per-round operations -------------------------------------------
    def update(self, leaf: int, reward: float) -> None:
        """Record one reward at ``leaf`` and refresh the path to the root."""
        state = self.state
        state.add(leaf, reward)
        self.updates += 1
        if self.refresh_interval and self.updates % self.refresh_interval == 0:
            self.rebuild()
            return
        n = int(state.counts[leaf])
        self.count_heap.rewrite(n, leaf)
        c = self._leaf_node[leaf]
        d, z, rk, rl = self.d, self.z, self.rd_key, self.rd_leaf
        prev_d, prev_z = d[c], z[c]
        d[c], z[c], rk[c] = leaf_stats(float(state.sums[leaf]) / n, n, self.theta, self.family)
        parent = self._parent
        s = parent[c]
        while s >= 0:
            self._remove_child(s, prev_d, prev_z)
            self._add_child(s, d[c], z[c])
            prev_d, prev_z = d[s], z[s]
            k = self._slot[c]
            self.hd[s].rewrite(d[c], k)
            self.hz[s].rewrite(z[c], k)
            self.hr[s].rewrite(rk[c], k, rl[c])
            self._recompute(s)
            c, s = s, parent[s]

    def select(self, t: int) -> int:
        """Leaf to pull at round ``t``: forced exploration, else the RD leaf."""
        nkey, nleaf = self.count_heap.peek()
        if nkey < math.sqrt(t) - self.tree.n_leaves / 2.0:
            return nleaf
        root = self.tree.root
        if self.d[root] == 0.0:
            # zero difficulty: the plug-in allocation is uniform, so w/N is maximal at min N
            return nleaf
        return self.rd_leaf[root]

    def stop_stat(self) -> float:
        """Signed Z at the root; its sign is the empirical answer."""
        return self.z[self.tree.root]

    def answer(self) -> Answer:
        return Answer.WIN if self.d[self.tree.root] >= 0.0 else Answer.LOSE

    @property
    def root_d(self) -> float:
        return self.d[self.tree.root]

    def check_heaps(self) -> None:
        for hs in (self.hd, self.hz, self.hr):
            for h in hs:
                if h is not None:
                    h.check()
        self.count_heap.check()

    def snapshot(self) -> tuple:
        return list(self.d), list(self.z), list(self.rd_key), list(self.rd_leaf)



class NaiveEngine:
    """Full O(|S|) recomputation of the allocation and the GLR after every pull.

    Only the per-leaf divergences are cached; the recursions run from scratch.
    """

    def __init__(self, tree: GameTree, state: EmpiricalState, theta: float, family):
        state.check_initialized()
        self.tree = tree
        self.state = state
        self.theta = theta
        self.family = family
        self.means = [float(x) for x in state.means]
        self.kl = [family.kl(m, theta) for m in self.means]
        self._fresh = False

    def update(self, leaf: int, reward: float) -> None:
        state = self.state
        state.add(leaf, reward)
        m = float(state.sums[leaf]) / int(state.counts[leaf])
        self.means[leaf] = m
        self.kl[leaf] = self.family.kl(m, self.theta)
        self._fresh = False

    def _refresh(self) -> None:
        if self._fresh:
            return
        tree, theta = self.tree, self.theta
        self.win = node_values(tree, self.means)[tree.root] >= theta
        _, self.d, self.w = allocation_from_divergences(tree, self.means, theta, self.kl, self.win)
        self.z = glr_from_divergences(tree, self.state.counts, self.means, theta, self.kl, self.win)
        self._fresh = True

    def weights(self):
        self._refresh()
        return self.w

    def stop_stat(self) -> float:
        """Z at the root, signed by the empirical answer like the fast engine's."""
        self._refresh()
        z = self.z[self.tree.root]
        return z if self.win else -z

    def answer(self) -> Answer:
        self._refresh()
        return Answer.WIN if self.win else Answer.LOSE
