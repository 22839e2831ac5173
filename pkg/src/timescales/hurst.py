"""Structure functions and (generalized) Hurst exponents.

The structure function of order q at lag tau is

    F_q(tau) = sqrt(<|x(t+tau) - x(t)|^q>_t) / sqrt(<|x(t+1) - x(t)|^q>_t)

on a cumulative log-price path x. It scales as tau^(H(q) q / 2), so the
log-log slope is divided by q/2 to get H(q). Note the square root is kept
for every q, not a q-th root. The denominator is the same moment of the
one-step returns, which makes F_q(1) = 1 and every fit invariant under
rescaling the path.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import FitError, ParameterError, RangeError
from .ingest import PriceSeries, ReturnSeries

log = logging.getLogger(__name__)


def as_path(series) -> np.ndarray:
    """Cumulative log-price path from a price series, return series or raw path."""
    if isinstance(series, PriceSeries):
        return series.log_path()
    if isinstance(series, ReturnSeries):
        return np.concatenate([[0.0], np.cumsum(series.values)])
    return np.asarray(series, dtype=float)


def default_taus(n: int) -> List[int]:
    """Powers of two from 1 up to span/8."""
    span = n - 1
    out, tau = [], 1
    while tau <= span / 8:
        out.append(tau)
        tau *= 2
    return out


def _weighted_mean(v: np.ndarray, alpha: Optional[float], tau: int = 1) -> float:
    if alpha is None:
        return float(v.mean())
    # decay counted in independent increments: w_t = alpha^((T - t) / tau)
    w = alpha ** (np.arange(v.size - 1, -1, -1, dtype=float) / tau)
    return float(np.dot(w, v) / w.sum())


def structure_function(path, taus: Sequence[int], q: float = 2.0, alpha: Optional[float] = None) -> List[Tuple[int, float]]:
    """``[(tau, F_q(tau))]`` using every overlapping start t (stride 1).

    ``alpha`` switches the time averages to exponential weights
    ``alpha^((T - t) / tau)`` that favour the end of the sample; the decay
    is per non-overlapping increment so every lag keeps the same effective
    memory.
    """
    x = as_path(path)
    span = x.size - 1
    if span < 4:
        raise RangeError("path too short")
    if not q > 0:
        raise ParameterError("q must be positive")
    base = _weighted_mean(np.abs(np.diff(x)) ** q, alpha)
    if base <= 0:
        raise RangeError("path is constant")
    out = []
    for tau in taus:
        tau = int(tau)
        if tau < 1 or tau > span / 4:
            raise RangeError(f"tau={tau} outside [1, span/4 = {span / 4:g}]")
        num = _weighted_mean(np.abs(x[tau:] - x[:-tau]) ** q, alpha, tau)
        out.append((tau, math.sqrt(num) / math.sqrt(base)))
    return out


@dataclass(frozen=True)
class HurstFit:
    q: float
    H: float
    stderr: float
    fit_range: Tuple[float, float]
    n_points: int
    weighting: str = "uniform"
    intercept: float = 0.0
    range_ok: bool = True

    @property
    def accepted(self) -> bool:
        return 0.0 < self.H < 1.0

    @property
    def persistence(self) -> str:
        if self.H > 0.5:
            return "persistent"
        if self.H < 0.5:
            return "anti-persistent"
        return "diffusive"


def fit_hurst(points: Sequence[Tuple[float, float]], q: float = 2.0, weighting: str = "uniform") -> HurstFit:
    """Least-squares slope of ln F on ln tau, divided by q/2.

    Fewer than 5 points or less than one decade in tau still yields a fit,
    flagged with ``range_ok=False``.
    """
    pts = sorted(points)
    if len(pts) < 3:
        raise FitError(f"need >= 3 points, have {len(pts)}")
    tau = np.array([p[0] for p in pts], dtype=float)
    F = np.array([p[1] for p in pts], dtype=float)
    if np.any(tau <= 0) or np.any(F <= 0):
        raise FitError("tau and F must be positive")
    lx, ly = np.log(tau), np.log(F)
    xm, ym = lx.mean(), ly.mean()
    sxx = np.sum((lx - xm) ** 2)
    slope = np.sum((lx - xm) * (ly - ym)) / sxx
    resid = ly - ym - slope * (lx - xm)
    se = math.sqrt(np.sum(resid**2) / (lx.size - 2) / sxx) if lx.size > 2 else math.inf
    range_ok = bool(len(pts) >= 5 and tau[-1] / tau[0] >= 10)
    if not range_ok:
        warnings.warn(f"Hurst fit over {len(pts)} points spanning x{tau[-1] / tau[0]:.3g} in tau", stacklevel=2)
    H = slope / (q / 2.0)
    if not 0 < H < 1:
        log.warning("fitted H=%.4f outside (0, 1); flagged, not clamped", H)
    return HurstFit(
        q, float(H), float(se / (q / 2.0)), (float(tau[0]), float(tau[-1])), len(pts),
        weighting, float(ym - slope * xm), range_ok,
    )


def hurst(series, taus: Optional[Sequence[int]] = None, q: float = 2.0, alpha: Optional[float] = None) -> HurstFit:
    """Structure function plus fit in one call."""
    x = as_path(series)
    taus = default_taus(x.size) if taus is None else taus
    weighting = "uniform" if alpha is None else f"exponential({alpha})"
    return fit_hurst(structure_function(x, taus, q, alpha), q, weighting)


@dataclass(frozen=True)
class SystematicsProtocol:
    n_subperiods: int = 3
    drop_ends: bool = True
    alphas: Tuple[float, ...] = (0.999,)

    @classmethod
    def none(cls) -> "SystematicsProtocol":
        return cls(0, False, ())


@dataclass(frozen=True)
class SystematicsResult:
    H: float
    total_err: float
    nominal: HurstFit
    variants: Tuple[Tuple[str, float], ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter((self.H, self.total_err))


def hurst_systematics(
    series,
    taus: Optional[Sequence[int]] = None,
    q: float = 2.0,
    protocol: SystematicsProtocol = SystematicsProtocol(),
) -> SystematicsResult:
    """Nominal H and the largest shift of H over the variant analyses.

    Variants: contiguous sub-periods (taus restricted to each piece's
    span/8, as for the default grid), dropping the first or the last tau,
    and exponentially weighted time averages.
    """
    x = as_path(series)
    taus = list(default_taus(x.size) if taus is None else taus)
    nominal = fit_hurst(structure_function(x, taus, q), q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        variants = []
        k = protocol.n_subperiods
        for i in range(k):
            lo, hi = i * (x.size // k), (i + 1) * (x.size // k) if i < k - 1 else x.size
            piece = x[lo:hi]
            sub_taus = [t for t in taus if t <= (piece.size - 1) / 8]
            if len(sub_taus) >= 3:
                fit = fit_hurst(structure_function(piece, sub_taus, q), q)
                variants.append((f"subperiod {i + 1}/{k}", fit.H))
        if protocol.drop_ends and len(taus) >= 4:
            variants.append(("drop first tau", fit_hurst(structure_function(x, taus[1:], q), q).H))
            variants.append(("drop last tau", fit_hurst(structure_function(x, taus[:-1], q), q).H))
        for a in protocol.alphas:
            fit = fit_hurst(structure_function(x, taus, q, alpha=a), q)
            variants.append((f"exponential alpha={a}", fit.H))
    total = max((abs(h - nominal.H) for _, h in variants), default=0.0)
    return SystematicsResult(nominal.H, float(total), nominal, tuple(variants))


@dataclass(frozen=True)
class GeneralizedHurst:
    fits: Tuple[HurstFit, ...]

    @property
    def spread(self) -> float:
        hs = [f.H for f in self.fits]
        return max(hs) - min(hs) if hs else 0.0


def generalized_hurst_scan(series, taus: Optional[Sequence[int]] = None, q_list: Sequence[float] = (1, 2, 3)) -> GeneralizedHurst:
    """One fit per q; ``spread`` is max H(q) - min H(q)."""
    for q in q_list:
        if not 0 < q <= 4:
            raise ParameterError(f"q={q} outside (0, 4]")
    x = as_path(series)
    taus = default_taus(x.size) if taus is None else taus
    return GeneralizedHurst(tuple(fit_hurst(structure_function(x, taus, q), q) for q in q_list))


def fit_points_scan(points_by_q: Sequence[Tuple[float, Sequence[Tuple[float, float]]]]) -> GeneralizedHurst:
    """Generalized scan from precomputed ``(q, [(tau, F_q)])`` pairs."""
    return GeneralizedHurst(tuple(fit_hurst(pts, q) for q, pts in points_by_q))
