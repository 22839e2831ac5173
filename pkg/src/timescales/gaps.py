"""Run-length ("gap") distributions of same-sign returns."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DegenerateSeriesError, FitError, ParameterError

# a gap in negative returns is a run of positive returns, and vice versa
DIRECTIONS = {"negative_gap": 1, "positive_gap": -1}


@dataclass(frozen=True)
class GapDistribution:
    direction: str
    lengths: np.ndarray
    counts: np.ndarray
    total: int

    @property
    def probability(self) -> np.ndarray:
        return self.counts / self.total if self.total else np.zeros_like(self.counts, dtype=float)

    def count_at(self, g: int) -> int:
        i = np.searchsorted(self.lengths, g)
        if i < self.lengths.size and self.lengths[i] == g:
            return int(self.counts[i])
        return 0


def run_lengths(signs: np.ndarray, keep_boundary: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Maximal runs of equal values as (value of each run, length of each run).

    The first and last runs are dropped unless ``keep_boundary``.
    """
    signs = np.asarray(signs)
    if signs.size == 0:
        return signs[:0], np.zeros(0, dtype=int)
    change = np.flatnonzero(signs[1:] != signs[:-1]) + 1
    bounds = np.concatenate([[0], change, [signs.size]])
    values = signs[bounds[:-1]]
    lengths = np.diff(bounds)
    if keep_boundary:
        return values, lengths
    return values[1:-1], lengths[1:-1]


def gap_distribution(returns, direction: str = "negative_gap", keep_boundary: bool = False) -> GapDistribution:
    """Histogram of run lengths of the sign opposite to the gap.

    ``negative_gap`` counts runs of consecutive positive returns bounded by
    negative ones. Zero returns are dropped before runs are formed, so they
    neither break nor extend a run. Runs cut by the series boundary are
    excluded because their length is unknown; ``keep_boundary`` counts them
    anyway.
    """
    if direction not in DIRECTIONS:
        raise ParameterError(f"direction must be one of {tuple(DIRECTIONS)}")
    x = np.asarray(getattr(returns, "values", returns), dtype=float)
    s = np.sign(x[x != 0]).astype(int)
    if s.size == 0 or np.all(s == s[0]):
        raise DegenerateSeriesError("series needs both positive and negative returns")
    run_sign = DIRECTIONS[direction]
    vals, lens = run_lengths(s, keep_boundary)
    lens = lens[vals == run_sign]
    if lens.size == 0:
        return GapDistribution(direction, np.zeros(0, int), np.zeros(0, int), 0)
    c = np.bincount(lens)
    lengths = np.flatnonzero(c)
    return GapDistribution(direction, lengths, c[lengths], int(lens.size))


@dataclass(frozen=True)
class GapFit:
    rho: float
    stderr: float
    intercept: float
    g_min: int
    g_max: int

    def predict(self, g) -> np.ndarray:
        return np.exp(self.intercept - self.rho * np.asarray(g, dtype=float))


def default_fit_range(dist: GapDistribution, min_count: int = 10) -> Tuple[int, int]:
    """From g = 1 up to the last length before counts first drop below ``min_count``."""
    g_max = 0
    for g in range(1, int(dist.lengths.max(initial=0)) + 1):
        if dist.count_at(g) < min_count:
            break
        g_max = g
    return 1, g_max


def fit_gap_slope(dist: GapDistribution, g_min: Optional[int] = None, g_max: Optional[int] = None) -> GapFit:
    """Exponential decay rate of gap counts.

    Weighted least squares of ``ln count`` on length with Poisson weights
    (weight = count, the inverse variance of ``ln count``); the stderr
    follows from those weights.
    """
    lo, hi = default_fit_range(dist)
    g_min = lo if g_min is None else g_min
    g_max = hi if g_max is None else g_max
    sel = (dist.lengths >= g_min) & (dist.lengths <= g_max) & (dist.counts > 0)
    g = dist.lengths[sel].astype(float)
    c = dist.counts[sel].astype(float)
    if g.size < 3:
        raise FitError(f"need >= 3 populated lengths in [{g_min}, {g_max}], have {g.size}")
    y = np.log(c)
    w = c
    gm = np.sum(w * g) / w.sum()
    ym = np.sum(w * y) / w.sum()
    sxx = np.sum(w * (g - gm) ** 2)
    slope = np.sum(w * (g - gm) * (y - ym)) / sxx
    return GapFit(float(-slope), float(math.sqrt(1.0 / sxx)), float(ym - slope * gm), int(g_min), int(g_max))
