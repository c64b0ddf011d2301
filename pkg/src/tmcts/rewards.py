"""One-parameter exponential-family reward models and seeded reward streams."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Bernoulli:
    name = "bernoulli"

    def kl(self, x: float, y: float) -> float:
        """KL divergence between Bernoulli(x) and Bernoulli(y), with 0 ln 0 = 0."""
        if x == y:
            if not 0.0 <= x <= 1.0:
                raise DomainError(f"Bernoulli mean {x} outside [0, 1]")
            return 0.0
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"Bernoulli mean {x} outside [0, 1]")
        if not 0.0 < y < 1.0:
            raise DomainError(f"kl({x}, {y}) is infinite: second argument must lie in (0, 1)")
        r = 0.0
        if x > 0.0:
            r += x * math.log(x / y)
        if x < 1.0:
            r += (1.0 - x) * math.log((1.0 - x) / (1.0 - y))
        return r if r > 0.0 else 0.0

    def check_mean(self, mean: float, closed: bool = True) -> None:
        ok = 0.0 <= mean <= 1.0 if closed else 0.0 < mean < 1.0
        if not ok:
            raise DomainError(f"Bernoulli mean {mean} outside {'[0, 1]' if closed else '(0, 1)'}")

    def in_interior(self, x: float) -> bool:
        return 0.0 < x < 1.0

    def sample(self, mean: float, rng: np.random.Generator) -> float:
        self.check_mean(mean)
        return 1.0 if rng.random() < mean else 0.0

    def sample_block(self, mean: float, rng: np.random.Generator, n: int) -> np.ndarray:
        return (rng.random(n) < mean).astype(float)

    @property
    def subgaussian_variance(self) -> float:
        return 0.25


@dataclass(frozen=True)
class Gaussian:
    sigma2: float = 1.0
    name = "gaussian"

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError(f"Gaussian variance must be positive, got {self.sigma2}")

    def kl(self, x: float, y: float) -> float:
        d = x - y
        return d * d / (2.0 * self.sigma2)

    def check_mean(self, mean: float, closed: bool = True) -> None:
        if not math.isfinite(mean):
            raise DomainError(f"Gaussian mean must be finite, got {mean}")

    def in_interior(self, x: float) -> bool:
        return math.isfinite(x)

    def sample(self, mean: float, rng: np.random.Generator) -> float:
        self.check_mean(mean)
        return mean + math.sqrt(self.sigma2) * rng.standard_normal()

    def sample_block(self, mean: float, rng: np.random.Generator, n: int) -> np.ndarray:
        return mean + math.sqrt(self.sigma2) * rng.standard_normal(n)

    @property
    def subgaussian_variance(self) -> float:
        return self.sigma2


RewardFamily = Bernoulli | Gaussian


def make_family(name: str, sigma2: float = 1.0) -> RewardFamily:
    name = name.lower()
    if name == "bernoulli":
        return Bernoulli()
    if name in ("gaussian", "normal"):
        return Gaussian(sigma2)
    raise ValueError(f"unknown reward family {name!r}")


def family_to_dict(family: RewardFamily) -> dict:
    if isinstance(family, Gaussian):
        return {"family": "gaussian", "sigma2": family.sigma2}
    return {"family": "bernoulli"}


def kl(family: RewardFamily, x: float, y: float) -> float:
    return family.kl(x, y)


def sample(family: RewardFamily, mean: float, rng: np.random.Generator) -> float:
    return family.sample(mean, rng)


def trial_rng(*key: int) -> np.random.Generator:
    """Independent generator for an integer key such as (master seed, trial index)."""
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


class RewardStream:
    """Per-leaf buffered reward draws.

    Leaf ``l``'s k-th pull always returns the same value for a given seed,
    whatever order the leaves are pulled in. That makes runs of different
    samplers on one seed share their randomness leaf by leaf.
    """

    BLOCK = 512

    def __init__(self, family: RewardFamily, means, seed):
        for m in means:
            family.check_mean(float(m))
        self.family = family
        self.means = [float(m) for m in means]
        key = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
        children = np.random.SeedSequence([int(k) for k in key]).spawn(len(self.means))
        self._rngs = [np.random.default_rng(ss) for ss in children]
        self._buf = [[] for _ in self.means]
        self._pos = [0] * len(self.means)

    def draw(self, leaf: int) -> float:
        pos = self._pos[leaf]
        buf = self._buf[leaf]
        if pos >= len(buf):
            buf = self.family.sample_block(self.means[leaf], self._rngs[leaf], self.BLOCK).tolist()
            self._buf[leaf] = buf
            pos = 0
        self._pos[leaf] = pos + 1
        return buf[pos]
