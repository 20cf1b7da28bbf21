import functools
import itertools
import math
from collections import Counter

import numpy as np
import pytest

from idfilter.dataset import rescale_unit
from idfilter.simgen import ButterflyConfig, FriedmanConfig, gen_butterfly, gen_friedman

BUTTERFLY_SCALES = tuple(range(5, 21))
FRIEDMAN_SCALES = tuple(range(1, 7))


@functools.lru_cache(maxsize=None)
def butterfly(seed=0, n=10000, noise=0.0):
    return rescale_unit(gen_butterfly(ButterflyConfig(n=n, seed=seed, noise_sd_fraction=noise)))


@functools.lru_cache(maxsize=None)
def friedman(seed=0, n=40000):
    return rescale_unit(gen_friedman(FriedmanConfig(n=n, seed=seed)))


def dense_morisita(points, m, k):
    """Reference index: count into a full E-dimensional array, then apply
    the definition with exact rational arithmetic."""
    from fractions import Fraction

    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, e = pts.shape
    grid = np.zeros((k,) * e, dtype=np.int64)
    for row in pts:
        idx = tuple(min(math.floor(c * k), k - 1) for c in row)
        grid[idx] += 1
    num = sum(math.perm(int(c), m) for c in grid.ravel())
    return float(Fraction(k ** (e * (m - 1)) * num, math.perm(n, m))), Counter(grid[grid > 0].tolist())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
