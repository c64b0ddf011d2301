import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tmcts.errors import DomainError
from tmcts.rewards import Bernoulli, Gaussian, RewardStream, kl, make_family, sample, trial_rng

BERN = Bernoulli()
unit = st.floats(0.0, 1.0)
interior = st.floats(1e-6, 1 - 1e-6)


def test_kl_fixed_values():
    assert kl(BERN, 0.5, 0.5) == 0.0
    assert kl(Gaussian(1.0), 0.0, 1.0) == 0.5
    # 0.2 ln(0.25) + 0.8 ln(4) = 0.6 ln 4, evaluated by hand
    assert kl(BERN, 0.2, 0.8) == pytest.approx(0.8317766166719343, rel=1e-14)
    assert kl(Gaussian(4.0), 1.0, 3.0) == 0.5


def test_kl_edge_first_arguments_are_finite():
    assert kl(BERN, 0.0, 0.5) == pytest.approx(math.log(2))
    assert kl(BERN, 1.0, 0.25) == pytest.approx(math.log(4))


def test_kl_domain_errors():
    with pytest.raises(DomainError):
        kl(BERN, 1.2, 0.5)
    with pytest.raises(DomainError):
        kl(BERN, 0.3, 1.0)
    with pytest.raises(DomainError):
        Gaussian(0.0)


@given(unit, interior)
def test_kl_nonnegative_zero_iff_equal(x, y):
    v = kl(BERN, x, y)
    assert v >= 0.0
    if x == y:
        assert v == 0.0
    elif abs(x - y) > 1e-6:
        assert v > 0.0


@given(st.floats(0.05, 0.95))
def test_kl_convex_in_second_argument(x):
    ys = np.linspace(0.01, 0.99, 199)
    vals = np.array([kl(BERN, x, y) for y in ys])
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    assert np.all(second > -1e-12)
    assert abs(ys[np.argmin(vals)] - x) <= 0.005 + 1e-12


def test_degenerate_bernoulli_samples():
    rng = trial_rng(0)
    assert all(sample(BERN, 1.0, rng) == 1.0 for _ in range(100))
    assert all(sample(BERN, 0.0, rng) == 0.0 for _ in range(100))


def test_gaussian_sample_mean():
    g = Gaussian(1.0)
    draws = g.sample_block(0.3, trial_rng(1), 10**6)
    assert abs(draws.mean() - 0.3) <= 5 * 1.0 / 1000


def test_concentration_of_empirical_means():
    bad = 0
    for k in range(2000):
        rng = trial_rng(2, k)
        xs = BERN.sample_block(0.3, rng, 200)
        if abs(xs.mean() - 0.3) > 6 * math.sqrt(0.21 / 200):
            bad += 1
    assert bad <= 2


def test_make_family():
    assert make_family("bernoulli") == BERN
    assert make_family("Gaussian", 2.0) == Gaussian(2.0)
    with pytest.raises(ValueError):
        make_family("poisson")


def test_reward_stream_is_per_leaf():
    means = [0.2, 0.5, 0.9]
    a = RewardStream(BERN, means, [1, 2, 3])
    b = RewardStream(BERN, means, [1, 2, 3])
    xs = [a.draw(0) for _ in range(700)] + [a.draw(2) for _ in range(5)]
    ys = [b.draw(2) for _ in range(5)]
    ys = [b.draw(0) for _ in range(700)] + ys
    assert xs == ys
    c = RewardStream(BERN, means, [1, 2, 4])
    assert [c.draw(0) for _ in range(700)] != xs[:700]


def test_reward_stream_validates_means():
    with pytest.raises(DomainError):
        RewardStream(BERN, [0.5, 1.5], 0)
