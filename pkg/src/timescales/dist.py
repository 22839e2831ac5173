"""Return distributions: t / q-exponential family, fits, tail index, stationary densities."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import betaln, gammaln

from .errors import FitError, InsufficientTailError, ParameterError
from .ingest import PriceSeries, ReturnSeries, log_returns, normalize

log = logging.getLogger(__name__)

GAUSSIAN = "gaussian"
CROSSOVER = "crossover"
POWER_LAW = "power_law"

NU_BOUNDS = (2.05, 200.0)
DLOGLIK_GAUSS = 5e-4
NU_GAUSS = 20.0
NU_POWER_LAW = 5.0


# --- t / q-exponential family ---------------------------------------------

def t_kernel(x, nu):
    """Unnormalized ``(1 + x^2/nu)^(-(nu+1)/2)``."""
    if not nu > 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * (nu + 1.0) * np.log1p(x * x / nu))


def t_density(x, nu):
    """Student-t density with ``nu`` degrees of freedom, unit scale.

    Normalizer is ``sqrt(nu) * B(1/2, nu/2)``.
    """
    if not nu > 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    if math.isinf(nu):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    log_z = 0.5 * math.log(nu) + betaln(0.5, 0.5 * nu)
    return t_kernel(x, nu) * math.exp(-log_z)


def t_density_unit(x, nu):
    """Member of the t family rescaled to unit variance (requires nu > 2)."""
    if not nu > 2:
        raise ParameterError(f"unit-variance t needs nu > 2, got {nu}")
    if math.isinf(nu):
        return t_density(x, nu)
    s = math.sqrt(nu / (nu - 2.0))
    return s * t_density(np.asarray(x, dtype=float) * s, nu)


def nu_to_q(nu: float) -> float:
    """q-exponential index equivalent to ``nu``: ``(nu+1)/2 = 1/(q-1)``."""
    if math.isinf(nu):
        return 1.0
    if not nu > -1:
        raise ParameterError(f"nu must exceed -1, got {nu}")
    return 1.0 + 2.0 / (nu + 1.0)


def q_to_nu(q: float) -> float:
    if q == 1.0:
        return math.inf
    if not 1.0 < q < 3.0:
        raise ParameterError(f"q must lie in (1, 3), got {q}")
    return 2.0 / (q - 1.0) - 1.0


def q_density(x, q):
    """Normalized q-exponential ``(1 + x^2 (q-1)/(3-q))^(-1/(q-1))``."""
    return t_density(x, q_to_nu(q))


def unit_t_loglik(x: np.ndarray, nu: float) -> float:
    """Log-likelihood of ``x`` under the unit-variance t with ``nu`` d.o.f."""
    x = np.asarray(x, dtype=float)
    n = x.size
    c = gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu) - 0.5 * math.log(math.pi * (nu - 2.0))
    return float(n * c - 0.5 * (nu + 1) * np.log1p(x * x / (nu - 2.0)).sum())


def gauss_loglik(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(-0.5 * x.size * math.log(2 * math.pi) - 0.5 * np.dot(x, x))


# --- histogram -------------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def histogram(values, width: float = 0.25, limit: float = 10.0) -> Histogram:
    """Symmetric linear bins on ``[-limit, limit]``.

    Density is normalized over the covered range only (out-of-range samples
    do not count towards N).
    """
    values = np.asarray(getattr(values, "values", values), dtype=float)
    nb = int(round(2 * limit / width))
    edges = np.linspace(-limit, limit, nb + 1)
    counts, _ = np.histogram(values, edges)
    total = counts.sum()
    if total == 0:
        raise ParameterError("no samples inside histogram range")
    density = counts / (total * np.diff(edges))
    return Histogram(edges, counts, density)


# --- t fit -----------------------------------------------------------------

@dataclass(frozen=True)
class TailFit:
    nu: float
    q: float
    scale: float
    loglik: float
    loglik_gauss: float
    regime: str
    nu_stderr: float
    n: int
    probe_nu: Tuple[float, ...] = ()
    probe_loglik: Tuple[float, ...] = ()

    @property
    def dloglik_per_sample(self) -> float:
        return (self.loglik - self.loglik_gauss) / self.n

    def as_row(self) -> dict:
        return {
            "nu": self.nu,
            "q": self.q,
            "stderr": self.nu_stderr,
            "loglik_t": self.loglik,
            "loglik_gauss": self.loglik_gauss,
            "regime": self.regime,
        }


def classify_regime(nu: float, dloglik_per_sample: float) -> str:
    if dloglik_per_sample < DLOGLIK_GAUSS or nu > NU_GAUSS:
        return GAUSSIAN
    if nu < NU_POWER_LAW:
        return POWER_LAW
    return CROSSOVER


def fit_student_t(
    returns,
    nu_bounds: Tuple[float, float] = NU_BOUNDS,
    grid_size: int = 48,
    min_n: int = 1000,
) -> TailFit:
    """Profile MLE of nu for the unit-variance t.

    The scale is tied to nu (``scale**2 = (nu-2)/nu``) so the fitted density
    has unit variance like the normalized input. A log-spaced grid over
    ``nu_bounds`` brackets the maximum, then golden-section search refines
    it. A maximum at the upper bound is reported as the Gaussian limit
    (``nu = inf``); one at the lower bound raises :class:`FitError`.
    """
    if isinstance(returns, ReturnSeries):
        if not returns.normalized:
            raise ParameterError("fit_student_t expects normalized returns")
        x = returns.values
    else:
        x = np.asarray(returns, dtype=float)
    n = x.size
    if n < min_n:
        raise ParameterError(f"need at least {min_n} returns, got {n}")
    lo, hi = nu_bounds
    grid = np.geomspace(lo, hi, grid_size)
    ll = np.array([unit_t_loglik(x, v) for v in grid])
    lg = gauss_loglik(x)
    i = int(np.argmax(ll))
    probes = (tuple(grid.tolist()), tuple(ll.tolist()))

    if i == 0:
        raise FitError(
            f"likelihood maximal at lower bound nu={lo}; tail heavier than the fitted family",
            {"probe_nu": probes[0], "probe_loglik": probes[1]},
        )
    if i == grid_size - 1:
        return TailFit(math.inf, 1.0, 1.0, float(ll[-1]), lg, GAUSSIAN, math.inf, n, *probes)

    def negll(u):
        return -unit_t_loglik(x, math.exp(u))

    u = np.log(grid)
    res = optimize.minimize_scalar(negll, bracket=(u[i - 1], u[i], u[i + 1]), method="golden", tol=1e-8)
    nu_hat = float(math.exp(res.x))
    ll_hat = -float(res.fun)
    if ll_hat < ll[i]:  # golden search should never lose to its own bracket midpoint
        nu_hat, ll_hat = float(grid[i]), float(ll[i])

    h = 1e-3 * nu_hat
    curv = (unit_t_loglik(x, nu_hat + h) - 2 * ll_hat + unit_t_loglik(x, nu_hat - h)) / (h * h)
    stderr = math.sqrt(-1.0 / curv) if curv < 0 else math.inf
    regime = classify_regime(nu_hat, (ll_hat - lg) / n)
    return TailFit(
        nu_hat, nu_to_q(nu_hat), math.sqrt((nu_hat - 2) / nu_hat), ll_hat, lg, regime, stderr, n, *probes
    )


# --- Hill estimator --------------------------------------------------------

def tail_exponent(returns, k_fraction: float = 0.05, min_tail: int = 50) -> float:
    """Hill estimate of the tail index of ``|x|``, both signs pooled.

    Uses the ``k = floor(k_fraction * n)`` largest absolute values with the
    (k+1)-th as threshold.
    """
    if not 0 < k_fraction <= 0.1:
        raise ParameterError(f"k_fraction must lie in (0, 0.1], got {k_fraction}")
    x = np.abs(np.asarray(getattr(returns, "values", returns), dtype=float))
    k = int(math.floor(k_fraction * x.size))
    if k < min_tail:
        raise InsufficientTailError(f"only {k} tail points (< {min_tail})")
    top = -np.partition(-x, k)[: k + 1]
    top.sort()
    threshold = top[0]
    if threshold <= 0:
        raise InsufficientTailError("tail threshold is zero")
    gamma = np.mean(np.log(top[1:] / threshold))
    return float(1.0 / gamma)


# --- multi-scale -----------------------------------------------------------

def multi_scale_fit(
    series: PriceSeries,
    scales: Sequence[int],
    min_returns: int = 1000,
    **fit_kwargs,
) -> List[Tuple[float, TailFit]]:
    """One t fit per aggregation factor on normalized non-overlapping returns.

    Scales leaving fewer than ``min_returns`` samples are skipped with a
    warning.
    """
    scales = list(scales)
    if scales != sorted(scales):
        raise ParameterError("scales must be sorted ascending")
    out = []
    for m in scales:
        if (len(series) - 1) // m < min_returns:
            log.warning("scale m=%d leaves %d returns (< %d); skipped", m, (len(series) - 1) // m, min_returns)
            continue
        r = normalize(log_returns(series, m))
        out.append((r.dt, fit_student_t(r, min_n=min_returns, **fit_kwargs)))
    return out


def crossover_scale(fits: Sequence[Tuple[float, TailFit]]) -> Optional[float]:
    """Smallest time scale classified as Gaussian, or None."""
    for dt, fit in fits:
        if fit.regime == GAUSSIAN:
            return dt
    return None


# --- stationary Fokker-Planck density ---------------------------------------

@dataclass(frozen=True)
class DriftDiffusion:
    """Drift ``f`` and diffusion ``g`` for ``dx = f dt + g eps``, ``<eps eps'> = D delta``.

    case "i":   f = -x, g = 1
    case "ii":  f = lam * g * g', g = 1 + x^2/nu
    case "iii": as "ii" with lam = D (3 - nu) / 4
    """

    case: str
    nu: float = 1.0
    D: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if self.case not in ("i", "ii", "iii"):
            raise ParameterError(f"unknown case {self.case!r}")
        if not self.D > 0:
            raise ParameterError("D must be positive")
        if self.case in ("ii", "iii") and not self.nu > 0:
            raise ParameterError(f"case {self.case} requires nu > 0")

    @property
    def coupling(self) -> float:
        """Drift prefactor ``lam`` in ``f = lam g g'``."""
        if self.case == "iii":
            return self.D * (3.0 - self.nu) / 4.0
        return self.lam

    def f(self, x):
        x = np.asarray(x, dtype=float)
        if self.case == "i":
            return -x
        return self.coupling * self.g(x) * self.dg(x)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        if self.case == "i":
            return np.ones_like(x)
        return 1.0 + x * x / self.nu

    def dg(self, x):
        x = np.asarray(x, dtype=float)
        if self.case == "i":
            return np.zeros_like(x)
        return 2.0 * x / self.nu

    def closed_form(self, x):
        """Unnormalized stationary density known analytically for each case."""
        x = np.asarray(x, dtype=float)
        if self.case == "i":
            return np.exp(-x * x / self.D)
        return self.g(x) ** (-2.0 * (1.0 - self.coupling / self.D))


def stationary_density(dd: DriftDiffusion, grid, refine: int = 8) -> np.ndarray:
    """Stationary solution of the Ito Fokker-Planck equation on ``grid``.

    ``P = exp(-(2/D) * int_0^x (D g g' - f) / g^2) / Z``. The inner integral
    is a cumulative trapezoid anchored at x = 0, taken on ``grid`` with every
    interval split into ``refine`` sub-steps; Z is a trapezoid over ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise ParameterError("grid must be increasing with at least 3 points")
    if refine < 1:
        raise ParameterError("refine must be >= 1")
    if np.any(np.abs(dd.g(grid)) < 1e-300):
        raise ParameterError("g(x) = 0 on grid: singular diffusion")
    k = np.arange((grid.size - 1) * refine + 1) / refine
    fine = np.interp(k, np.arange(grid.size), grid)
    g = dd.g(fine)
    h = (dd.D * g * dd.dg(fine) - dd.f(fine)) / (g * g)
    w = cumulative_trapezoid(h, fine, initial=0.0)[::refine]
    w -= np.interp(0.0, grid, w)
    p = np.exp(-(2.0 / dd.D) * w)
    return p / trapezoid(p, grid)
