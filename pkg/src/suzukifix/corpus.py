"""Random and canonical instances for property checks and the search harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contraction import MultiMap
from .metric import FiniteMetricSpace, random_space

R_CHOICES = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def halving_grid(levels: int = 8) -> FiniteMetricSpace:
    """The real points 1, 1/2, ..., 2**-levels."""
    return FiniteMetricSpace.on_line([2.0**-k for k in range(levels + 1)])


def halving_map(levels: int = 8) -> MultiMap:
    """x -> x/2 on :func:`halving_grid`; the least point absorbs (x/2 rounded
    back into the grid), which makes it the unique fixed point."""
    space = halving_grid(levels)
    return MultiMap.single_valued(space, [min(k + 1, levels) for k in range(levels + 1)])


def halving_multimap(levels: int = 8) -> MultiMap:
    """x -> {x/2, x/4}, both rounded into :func:`halving_grid`."""
    space = halving_grid(levels)
    return MultiMap(space, tuple((min(k + 1, levels), min(k + 2, levels)) for k in range(levels + 1)))


def constant_map(space: FiniteMetricSpace, p: int = 0) -> MultiMap:
    return MultiMap.single_valued(space, [p] * len(space))


def identity_map(space: FiniteMetricSpace) -> MultiMap:
    return MultiMap.single_valued(space, list(range(len(space))))


def random_multimap(rng: np.random.Generator, space: FiniteMetricSpace, max_image: int = 2) -> MultiMap:
    """Images drawn from a small random pool of targets.

    Small pools make collapsing maps, hence contractions, common enough for
    the corpus to exercise both certified and uncertified instances.
    """
    n = len(space)
    pool_size = int(rng.integers(1, min(n, 3) + 1))
    pool = rng.choice(n, size=pool_size, replace=False)
    images = []
    for _ in range(n):
        k = int(rng.integers(1, min(max_image, pool_size) + 1))
        images.append(tuple(int(p) for p in rng.choice(pool, size=k, replace=False)))
    return MultiMap(space, tuple(images))


@dataclass
class Instance:
    T: MultiMap
    r: float
    seed: int


def random_instance(seed: int, max_points: int = 6) -> Instance:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_points + 1))
    space = random_space(rng, n)
    return Instance(random_multimap(rng, space), float(rng.choice(R_CHOICES)), seed)


def random_corpus(count: int, seed: int = 0, max_points: int = 6) -> list[Instance]:
    return [random_instance(seed * 100_003 + i, max_points) for i in range(count)]
