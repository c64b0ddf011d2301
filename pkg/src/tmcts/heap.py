"""Indexed binary heap with O(1) peek and O(log n) in-place key rewrite.

Entries are addressed by a dense index ``0..n-1``. Each entry carries a key
and a tie value; equal keys are ordered by the smaller tie value in both
orientations, so ``peek`` is fully deterministic.
"""
from __future__ import annotations


class IndexedHeap:
    __slots__ = ("keys", "ties", "heap", "pos", "is_max")

    def __init__(self, keys, ties=None, is_max: bool = False):
        self.keys = [float(k) for k in keys]
        n = len(self.keys)
        self.ties = list(range(n)) if ties is None else list(ties)
        if len(self.ties) != n:
            raise ValueError("keys and ties differ in length")
        self.is_max = is_max
        self.heap = list(range(n))
        self.pos = list(range(n))
        for k in range(n // 2 - 1, -1, -1):
            self._down(k)

    @classmethod
    def heapify(cls, items, is_max: bool = False) -> "IndexedHeap":
        """Build from ``(key, index)`` pairs covering every index ``0..n-1`` once."""
        items = list(items)
        keys = [0.0] * len(items)
        seen = set()
        for key, idx in items:
            if not 0 <= idx < len(items) or idx in seen:
                raise ValueError("indices must be dense and distinct")
            seen.add(idx)
            keys[idx] = key
        return cls(keys, is_max=is_max)

    def __len__(self):
        return len(self.heap)

    def _before(self, i: int, j: int) -> bool:
        ki, kj = self.keys[i], self.keys[j]
        if ki == kj:
            return self.ties[i] < self.ties[j]
        return ki > kj if self.is_max else ki < kj

    def _up(self, k: int) -> None:
        heap, pos = self.heap, self.pos
        i = heap[k]
        while k > 0:
            p = (k - 1) >> 1
            j = heap[p]
            if not self._before(i, j):
                break
            heap[k] = j
            pos[j] = k
            k = p
        heap[k] = i
        pos[i] = k

    def _down(self, k: int) -> None:
        heap, pos = self.heap, self.pos
        n = len(heap)
        i = heap[k]
        while True:
            c = 2 * k + 1
            if c >= n:
                break
            if c + 1 < n and self._before(heap[c + 1], heap[c]):
                c += 1
            j = heap[c]
            if not self._before(j, i):
                break
            heap[k] = j
            pos[j] = k
            k = c
        heap[k] = i
        pos[i] = k

    def peek(self) -> tuple:
        """(key, index) of the extreme entry."""
        i = self.heap[0]
        return self.keys[i], i

    def peek_index(self) -> int:
        return self.heap[0]

    def peek_key(self) -> float:
        return self.keys[self.heap[0]]

    def key(self, index: int) -> float:
        return self.keys[index]

    def rewrite(self, key: float, index: int, tie=None) -> None:
        """Replace the key (and optionally the tie value) of ``index``."""
        if not 0 <= index < len(self.keys):
            raise KeyError(f"index {index} not in heap")
        old_key, old_tie = self.keys[index], self.ties[index]
        self.keys[index] = key
        if tie is not None:
            self.ties[index] = tie
        k = self.pos[index]
        if self._before(index, self.heap[(k - 1) >> 1]) if k > 0 else False:
            self._up(k)
        elif key != old_key or self.ties[index] != old_tie:
            self._down(k)

    def check(self) -> None:
        """Assert heap order and position-map consistency (debug aid)."""
        heap, pos = self.heap, self.pos
        assert sorted(heap) == list(range(len(heap)))
        for k, i in enumerate(heap):
            assert pos[i] == k
            if k > 0:
                assert not self._before(i, heap[(k - 1) >> 1])

    def linear_extreme(self) -> tuple:
        """Linear-scan reference for ``peek``."""
        best = 0
        for i in range(1, len(self.keys)):
            if self._before(i, best):
                best = i
        return self.keys[best], best

