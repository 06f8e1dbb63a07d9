"""Expensive manifold searches shared by the test modules (computed once per process)."""

import time
from functools import lru_cache

from r4bp.manifolds import homoclinic_search

P2_TARGET = 1.925


@lru_cache(maxsize=None)
def search_019():
    """mu=0.019, eps_ic=1e-5, 512 branches, cuts 4 and 5 refined; returns (cuts, found, fragile, seconds)."""
    t0 = time.perf_counter()
    cuts, found, fragile = homoclinic_search(0.019, n_cuts=5, n_branches=512, cut_indices=[4, 5])
    return cuts, found, fragile, time.perf_counter() - t0


@lru_cache(maxsize=None)
def search_02():
    """mu=0.2, 512 branches, fourth cut refined."""
    t0 = time.perf_counter()
    cuts, found, fragile = homoclinic_search(0.2, n_cuts=4, n_branches=512, cut_indices=[4])
    return cuts, found, fragile, time.perf_counter() - t0


def nearest(candidates, x):
    return min(candidates, key=lambda c: abs(c.x_cross - x)) if candidates else None
