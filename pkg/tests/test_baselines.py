import numpy as np
import pytest

from helpers import BERN, random_instance, random_state
from tmcts.baselines import leaf_radius, propagate_intervals, run_lucb_micro, run_ugape
from tmcts.glr import ThresholdParams, beta
from tmcts.tree import MIN, Answer, from_nested, node_values

SEP = from_nested([[0, 0], [0, 0], [0, 0]])
SEP_MEANS = [0.9, 0.85, 0.3, 0.8, 0.2, 0.25]


def test_radius_matches_beta_at_equal_counts():
    p = ThresholdParams(0.05, 4)
    r = leaf_radius([7, 7, 7, 7], p, BERN)
    assert r[0] == pytest.approx(np.sqrt(beta([7] * 4, p) / (2 * 7)), rel=1e-14)


def test_single_leaf_interval_shrinks():
    t = from_nested([0])
    p = ThresholdParams(0.1, 1)
    widths = [propagate_intervals(t, [n], [0.6], p, BERN) for n in (10, 10**4, 10**8)]
    w = [iv.ucb[t.root] - iv.lcb[t.root] for iv in widths]
    assert w[0] > w[1] > w[2] and w[2] < 1e-3


def test_max_of_disjoint_intervals():
    t = from_nested([0, 0])
    iv = propagate_intervals(t, [10**6, 10**6], [0.2, 0.8], ThresholdParams(0.1, 2), BERN)
    assert iv.lcb[t.root] == iv.lcb[2] and iv.ucb[t.root] == iv.ucb[2]


def test_root_interval_contains_empirical_value():
    rng = np.random.default_rng(0)
    for _ in range(200):
        t, _ = random_instance(rng, BERN, max_depth=3)
        s = random_state(rng, t, BERN)
        iv = propagate_intervals(t, s.counts, s.means, ThresholdParams(0.1, t.n_leaves), BERN)
        v = node_values(t, s.means)
        assert np.all(iv.lcb <= np.asarray(v) + 1e-12) and np.all(np.asarray(v) <= iv.ucb + 1e-12)


@pytest.mark.parametrize("runner", [run_ugape, run_lucb_micro])
def test_separated_instance_correct(runner):
    ok = sum(runner(SEP, SEP_MEANS, 0.5, BERN, 0.1, seed).correct for seed in range(100))
    assert ok >= 90


@pytest.mark.parametrize("runner", [run_ugape, run_lucb_micro])
def test_no_instant_stop_and_exclusive_triggers(runner):
    seen = []

    def hook(state, iv):
        kids = SEP.children[SEP.root]
        lose = all(iv.ucb[c] < 0.5 for c in kids)
        win = any(iv.lcb[c] >= 0.5 for c in kids)
        assert not (win and lose)
        seen.append(state.t)

    res = runner(SEP, SEP_MEANS, 0.5, BERN, 0.1, 1, on_round=hook)
    assert seen[0] == 6 and res.tau > 6


@pytest.mark.parametrize("runner", [run_ugape, run_lucb_micro])
def test_deterministic(runner):
    a = runner(SEP, SEP_MEANS, 0.5, BERN, 0.1, [3, 1])
    b = runner(SEP, SEP_MEANS, 0.5, BERN, 0.1, [3, 1])
    assert (a.tau, a.counts, a.recommendation) == (b.tau, b.counts, b.recommendation)


def test_single_child_root():
    t = from_nested([(MIN, [0, 0])])
    res = run_lucb_micro(t, [0.8, 0.9], 0.5, BERN, 0.1, 0)
    assert res.recommendation is Answer.WIN


def test_lose_instance():
    res = run_ugape(SEP, [0.3, 0.9, 0.2, 0.8, 0.1, 0.45], 0.5, BERN, 0.1, 0)
    assert res.recommendation is Answer.LOSE


def test_min_root_rejected():
    with pytest.raises(ValueError):
        run_ugape(from_nested([0, 0], MIN), [0.7, 0.8], 0.5, BERN, 0.1)


def test_coverage_of_depth1_children():
    """Child intervals cover the true child values at every round in most runs."""
    true = node_values(SEP, SEP_MEANS)
    kids = SEP.children[SEP.root]
    failures = 0
    for seed in range(300):
        bad = []

        def hook(state, iv):
            if not bad and any(not iv.lcb[c] <= true[c] <= iv.ucb[c] for c in kids):
                bad.append(state.t)

        run_ugape(SEP, SEP_MEANS, 0.5, BERN, 0.1, [7, seed], on_round=hook)
        failures += bool(bad)
    assert failures <= 30
