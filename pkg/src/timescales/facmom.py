"""Normalized factorial moments of return-sign multiplicities.

A series is cut into consecutive windows ("events") of ``window_len``
returns; each window is split into ``n_bins`` equal bins, and strictly
positive / strictly negative returns are counted per bin. Zero returns
count as neither sign.

For uncorrelated signs the moments equal 1 only up to the finite-bin
binomial factor: with ``b = window_len / n_bins`` returns per bin,
``E[F_2] = 1 - 1/b``. :func:`binomial_baseline` gives that value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import FitError, ParameterError, UndefinedMomentError

KINDS = ("pp", "mm", "pm", "plain")
DEFAULT_BINS = (1, 2, 4, 10, 20)
DEFAULT_OFFSETS = (50, 100)


@dataclass(frozen=True)
class SignEventSet:
    window_len: int
    offset: int
    n_bins: int
    pos: np.ndarray  # (n_events, n_bins)
    neg: np.ndarray

    @property
    def n_events(self) -> int:
        return self.pos.shape[0]

    def counts(self, species: str) -> np.ndarray:
        if species == "p":
            return self.pos
        if species == "m":
            return self.neg
        if species == "plain":
            return self.pos + self.neg
        raise ParameterError(f"unknown species {species!r}")


def build_events(returns, window_len: int = 200, n_bins: int = 1, offset: int = 0) -> SignEventSet:
    """Count signs per bin in consecutive disjoint windows starting at ``offset``.

    A partial trailing window is dropped.
    """
    if window_len < 1 or n_bins < 1:
        raise ParameterError("window_len and n_bins must be positive")
    if window_len % n_bins:
        raise ParameterError(f"window_len={window_len} not divisible by n_bins={n_bins}")
    if not 0 <= offset < window_len:
        raise ParameterError(f"offset must lie in [0, {window_len}), got {offset}")
    x = np.asarray(getattr(returns, "values", returns), dtype=float)[offset:]
    n_events = x.size // window_len
    x = x[: n_events * window_len].reshape(n_events, n_bins, window_len // n_bins)
    pos = (x > 0).sum(axis=2)
    neg = (x < 0).sum(axis=2)
    return SignEventSet(window_len, offset, n_bins, pos, neg)


def _falling(n: np.ndarray, q: int) -> np.ndarray:
    out = np.ones_like(n, dtype=float)
    for j in range(q):
        out *= n - j
    return out


def _per_event(events: SignEventSet, q: int, kind: str) -> np.ndarray:
    if events.n_events == 0:
        raise UndefinedMomentError("no events")
    nb = events.n_bins
    if kind == "pm":
        if q != 2:
            raise ParameterError("unlike-sign moment is defined for q = 2 only")
        mp = events.pos.sum(axis=1).mean()
        mm = events.neg.sum(axis=1).mean()
        if mp == 0 or mm == 0:
            raise UndefinedMomentError("zero mean multiplicity for one sign")
        num = (events.pos * events.neg).astype(float).mean(axis=1)
        return num / (mp * mm / nb**2)
    species = {"pp": "p", "mm": "m", "plain": "plain"}.get(kind)
    if species is None:
        raise ParameterError(f"unknown kind {kind!r}")
    n = events.counts(species)
    mean = n.sum(axis=1).mean()
    if mean == 0:
        raise UndefinedMomentError(f"zero mean multiplicity for kind {kind}")
    num = _falling(n, q).mean(axis=1)
    return num / (mean / nb) ** q


def factorial_moment(events: SignEventSet, q: int = 2, kind: str = "pp") -> Tuple[float, float]:
    """Binned normalized factorial moment and its standard error over events.

    ``<n>`` in the denominator is the average window multiplicity over all
    events. The error ignores fluctuations of that denominator.
    """
    if q < 2:
        raise ParameterError("q must be >= 2")
    r = _per_event(events, q, kind)
    err = r.std(ddof=1) / math.sqrt(r.size) if r.size > 1 else math.inf
    return float(r.mean()), float(err)


def binomial_baseline(window_len: int, n_bins: int, q: int = 2) -> float:
    """Expected like- or unlike-sign F_q for iid signs: ``prod_j (1 - j/b)``, ``b`` returns per bin."""
    b = window_len // n_bins
    return float(np.prod([1.0 - j / b for j in range(q)]))


@dataclass(frozen=True)
class FacMomRow:
    kind: str
    q: int
    n_bins: int
    value: float
    stat_err: float
    sys_err: float

    @property
    def err(self) -> float:
        return self.stat_err + self.sys_err


@dataclass(frozen=True)
class FacMomTable:
    rows: Tuple[FacMomRow, ...]
    window_len: int = 200
    n_events: int = 0

    def select(self, kind: str, q: int = 2) -> List[FacMomRow]:
        return sorted((r for r in self.rows if r.kind == kind and r.q == q), key=lambda r: r.n_bins)

    def get(self, kind: str, n_bins: int, q: int = 2) -> FacMomRow:
        for r in self.rows:
            if (r.kind, r.n_bins, r.q) == (kind, n_bins, q):
                return r
        raise KeyError((kind, n_bins, q))


def facmom_scan(
    returns,
    window_len: int = 200,
    bins_list: Sequence[int] = DEFAULT_BINS,
    offsets: Sequence[int] = DEFAULT_OFFSETS,
    kinds: Sequence[str] = ("pp", "mm", "pm"),
    qs: Sequence[int] = (2,),
) -> FacMomTable:
    """Moments for every (kind, q, n_bins) at offset 0.

    ``sys_err`` is the largest absolute shift of the value when the window
    grid starts at each of ``offsets`` instead.
    """
    for nb in bins_list:
        if window_len % nb:
            raise ParameterError(f"n_bins={nb} does not divide window_len={window_len}")
    rows = []
    n_events = 0
    for nb in bins_list:
        base = build_events(returns, window_len, nb, 0)
        n_events = base.n_events
        shifted = [build_events(returns, window_len, nb, off) for off in offsets]
        for kind in kinds:
            for q in qs:
                if kind == "pm" and q != 2:
                    continue
                value, stat = factorial_moment(base, q, kind)
                sys = max((abs(factorial_moment(ev, q, kind)[0] - value) for ev in shifted), default=0.0)
                rows.append(FacMomRow(kind, q, nb, value, stat, sys))
    return FacMomTable(tuple(rows), window_len, n_events)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int

    @property
    def t(self) -> float:
        if self.stderr == 0:
            return math.inf if self.slope else 0.0
        return self.slope / self.stderr


def intermittency_fit(table: FacMomTable, kind: str = "pp", q: int = 2) -> SlopeFit:
    """Weighted least-squares slope of ln F_q against ln n_bins.

    Weights use ``(stat_err + sys_err) / F``; when every error is zero the
    fit is unweighted and the stderr comes from the residuals.
    """
    rows = table.select(kind, q)
    if len(rows) < 3:
        raise FitError(f"need >= 3 rows for ({kind}, q={q}), have {len(rows)}")
    x = np.log([r.n_bins for r in rows])
    vals = np.array([r.value for r in rows])
    if np.any(vals <= 0):
        raise FitError("non-positive factorial moment; log undefined")
    y = np.log(vals)
    sig = np.array([r.err for r in rows]) / vals
    if np.all(sig > 0):
        w = 1.0 / sig**2
        xm = np.sum(w * x) / w.sum()
        ym = np.sum(w * y) / w.sum()
        sxx = np.sum(w * (x - xm) ** 2)
        slope = np.sum(w * (x - xm) * (y - ym)) / sxx
        stderr = math.sqrt(1.0 / sxx)
    else:
        xm, ym = x.mean(), y.mean()
        sxx = np.sum((x - xm) ** 2)
        slope = np.sum((x - xm) * (y - ym)) / sxx
        resid = y - ym - slope * (x - xm)
        stderr = math.sqrt(np.sum(resid**2) / (len(x) - 2) / sxx)
    return SlopeFit(float(slope), float(stderr), float(ym - slope * xm), len(rows))


def intermittency_slope(table: FacMomTable, kind: str = "pp", q: int = 2) -> float:
    return intermittency_fit(table, kind, q).slope


# --- multiplicity distributions ---------------------------------------------

@dataclass(frozen=True)
class MultiplicityDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ParameterError("probabilities must be a non-empty 1-d array")
        if np.any(p < 0):
            raise ParameterError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ParameterError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_counts(cls, multiplicities: Iterable[int]) -> "MultiplicityDistribution":
        """Empirical distribution of observed multiplicities."""
        m = np.asarray(list(multiplicities) if not isinstance(multiplicities, np.ndarray) else multiplicities)
        m = m.astype(int).ravel()
        if m.size == 0 or m.min() < 0:
            raise ParameterError("need non-negative multiplicities")
        c = np.bincount(m)
        return cls(c / m.size)

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.probs.size)

    @property
    def mean(self) -> float:
        return float(np.dot(self.probs, self.n))


def moments_from_distribution(P: MultiplicityDistribution, q: int) -> float:
    """``sum_n P_n n(n-1)...(n-q+1) / <n>^q``; F_0 = F_1 = 1."""
    if q != int(q) or q < 0:
        raise ParameterError(f"q must be a non-negative integer, got {q}")
    if q < 2:
        return 1.0
    mean = P.mean
    if mean <= 0:
        raise UndefinedMomentError("mean multiplicity is zero")
    return float(np.dot(P.probs, _falling(P.n.astype(float), int(q))) / mean**q)


def generating_function(P: MultiplicityDistribution, z: float) -> float:
    """``G(z) = sum_n P_n (1+z)^n`` on the finite support of P."""
    return float(np.dot(P.probs, np.power(1.0 + z, P.n.astype(float))))


def cumulants_from_factorial(F: Sequence[float], mean_n: float = 1.0) -> List[float]:
    """Normalized cumulants K_2..K_Q from factorial moments F_2..F_Q.

    Takes the formal logarithm of ``G(z) = sum_q z^q <n>^q F_q / q!`` (with
    F_0 = F_1 = 1) and reads off ``ln G = sum_q z^q <n>^q K_q / q!``.
    """
    F = list(F)
    if not F:
        raise ParameterError("need at least F_2")
    Q = len(F) + 1
    a = [1.0, mean_n] + [mean_n**q * F[q - 2] / math.factorial(q) for q in range(2, Q + 1)]
    b = [0.0] * (Q + 1)
    for q in range(1, Q + 1):
        b[q] = a[q] - sum(k * b[k] * a[q - k] for k in range(1, q)) / q
    return [b[q] * math.factorial(q) / mean_n**q for q in range(2, Q + 1)]


def factorial_from_cumulants(K: Sequence[float], mean_n: float = 1.0) -> List[float]:
    """Inverse of :func:`cumulants_from_factorial` (K_1 = 1)."""
    K = list(K)
    if not K:
        raise ParameterError("need at least K_2")
    Q = len(K) + 1
    b = [0.0, mean_n] + [mean_n**q * K[q - 2] / math.factorial(q) for q in range(2, Q + 1)]
    a = [1.0] + [0.0] * Q
    for q in range(1, Q + 1):
        a[q] = sum(k * b[k] * a[q - k] for k in range(1, q + 1)) / q
    return [a[q] * math.factorial(q) / mean_n**q for q in range(2, Q + 1)]
