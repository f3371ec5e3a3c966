"""Seeding, trial dispatch and error bars shared by the Monte Carlo estimators."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np


def trial_seeds(master: int, n: int, stream: int = 0) -> np.ndarray:
    """Per-trial seeds: a pure function of ``(master, stream, trial index)``."""
    return np.random.SeedSequence([int(master), int(stream)]).generate_state(
        n, dtype=np.uint64)


def map_trials(fn: Callable, seeds: Sequence, threads: int = 1) -> list:
    """``[fn(s) for s in seeds]``, optionally on a thread pool; order is preserved."""
    if threads <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds))


def mean_stderr(values) -> tuple:
    """Sample mean and its standard error (one value per independent trial)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
