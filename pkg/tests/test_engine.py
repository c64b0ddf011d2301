import math

import numpy as np
import pytest

from helpers import BERN, GAUSS, random_state, random_tree
from tmcts.allocation import plugin_allocation
from tmcts.engine import IncrementalEngine, NaiveEngine, leaf_stats, reference_stats
from tmcts.glr import EmpiricalState, glr
from tmcts.sampling import select_forced, select_rd
from tmcts.tree import MAX, MIN, complete_tree, from_nested, node_answers


def _close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def _assert_matches_reference(eng, rel=1e-9):
    tree = eng.tree
    d, z, rk, rl = reference_stats(tree, eng.state.counts, eng.state.means, eng.theta, eng.family)
    for s in range(tree.n_nodes):
        assert _close(eng.d[s], d[s], rel), (s, eng.d[s], d[s])
        assert _close(eng.z[s], z[s], rel), (s, eng.z[s], z[s])
        if eng.rd_leaf[s] != rl[s]:
            # only a floating-point near tie may separate the two
            assert _close(eng.rd_key[s], rk[s], 1e-9)


def _sign_law(eng):
    ans = node_answers(eng.tree, eng.state.means, eng.theta)
    for s in range(eng.tree.n_nodes):
        assert (eng.d[s] >= 0) == (ans[s].value == "win")
        assert (eng.z[s] >= 0) == (ans[s].value == "win") or eng.z[s] == 0.0


def test_leaf_rows():
    d, z, k = leaf_stats(0.8, 10, 0.5, BERN)
    assert d == BERN.kl(0.8, 0.5) and z == 10 * d and k == 1 / (10 * d)
    d, z, k = leaf_stats(0.2, 4, 0.5, BERN)
    assert d == -BERN.kl(0.2, 0.5) and z == 4 * d
    assert leaf_stats(0.5, 7, 0.5, BERN) == (0.0, 0.0, math.inf)


def test_initial_statistics_match_reference():
    rng = np.random.default_rng(3)
    for _ in range(100):
        tree = random_tree(rng, 3, 3)
        eng = IncrementalEngine(tree, random_state(rng, tree, BERN), 0.5, BERN)
        _assert_matches_reference(eng)
        _sign_law(eng)


def test_signs_on_uniform_sides():
    t = complete_tree(2, 2)
    up = IncrementalEngine(t, EmpiricalState.from_means([3] * 4, [0.7, 0.8, 0.6, 0.9]), 0.5, BERN)
    assert up.stop_stat() > 0
    down = IncrementalEngine(t, EmpiricalState.from_means([3] * 4, [0.1, 0.2, 0.3, 0.4]), 0.5, BERN)
    assert down.stop_stat() < 0


@pytest.mark.parametrize("family", [BERN, GAUSS])
def test_updates_match_reinit_and_naive(family):
    rng = np.random.default_rng(4)
    for trial in range(60):
        tree = random_tree(rng, 4, 3)
        state = random_state(rng, tree, family, max_count=5)
        eng = IncrementalEngine(tree, state, 0.5, family)
        for _ in range(100):
            leaf = int(rng.integers(tree.n_leaves))
            r = float(rng.random() < 0.5) if family is BERN else float(0.5 + rng.standard_normal())
            before = eng.snapshot()
            eng.update(leaf, r)
            _assert_matches_reference(eng)
            _sign_law(eng)
            zn = glr(tree, state, 0.5, family)
            assert _close(abs(eng.stop_stat()), zn, 1e-9)
            path = set(tree.path_to_root(tree.leaves[leaf]))
            after = eng.snapshot()
            for s in range(tree.n_nodes):
                if s not in path:
                    assert all(before[k][s] == after[k][s] for k in range(4))
        eng.check_heaps()


def test_selection_matches_naive_rd():
    rng = np.random.default_rng(5)
    rounds = 0
    while rounds < 10**4:
        tree = random_tree(rng, 4, 3)
        state = random_state(rng, tree, BERN, max_count=3)
        eng = IncrementalEngine(tree, state, 0.5, BERN)
        for _ in range(200):
            t = state.t + 1
            leaf = eng.select(t)
            want = select_forced(state.counts, t)
            if want is None:
                w = plugin_allocation(tree, state.means, 0.5, BERN).w
                want = select_rd(state.counts, w)
                if leaf != want:
                    a, b = w[leaf] / state.counts[leaf], w[want] / state.counts[want]
                    assert _close(a, b, 1e-9)
            else:
                assert leaf == want
            eng.update(leaf, float(rng.random() < 0.5))
            rounds += 1


def test_all_zero_difficulty_falls_back_to_lowest_leaf():
    t = complete_tree(2, 2)
    eng = IncrementalEngine(t, EmpiricalState([2, 2, 2, 2], [1.0] * 4), 0.5, BERN)
    assert all(k == math.inf for k in eng.rd_key)
    assert eng.select(5) == 0


def test_long_run_drift():
    rng = np.random.default_rng(6)
    tree = complete_tree(5, 2)
    state = random_state(rng, tree, BERN, max_count=3)
    eng = IncrementalEngine(tree, state, 0.5, BERN, refresh_interval=None)
    p = rng.uniform(0.1, 0.9, tree.n_leaves)
    leaves = rng.integers(tree.n_leaves, size=10**5)
    coins = rng.random(10**5)
    for leaf, c in zip(leaves.tolist(), coins.tolist()):
        eng.update(leaf, float(c < p[leaf]))
    z_fast = eng.stop_stat()
    eng.rebuild()
    assert abs(z_fast - eng.stop_stat()) <= 1e-6 * max(1.0, abs(eng.stop_stat()))


def test_naive_engine_agrees_with_recursions():
    rng = np.random.default_rng(7)
    tree = from_nested([[0, 0, 0], [0, (MIN, [0, 0])]], MAX)
    state = random_state(rng, tree, BERN)
    ne = NaiveEngine(tree, state, 0.5, BERN)
    for _ in range(50):
        ne.update(int(rng.integers(tree.n_leaves)), float(rng.random() < 0.5))
        assert abs(ne.stop_stat()) == pytest.approx(glr(tree, state, 0.5, BERN), rel=1e-14)
        assert ne.weights() == pytest.approx(plugin_allocation(tree, state.means, 0.5, BERN).w)


def test_uninitialised_state_rejected():
    with pytest.raises(ValueError):
        IncrementalEngine(complete_tree(1, 2), EmpiricalState([0, 1], [0.0, 1.0]), 0.5, BERN)
