"""Synthetic series with known ground truth.

Every estimator in the package is checked against one of these generators.
Randomness comes from numpy's counter-based Philox bit generator, seeded
with a 64-bit integer, so a given (spec, seed) pair always produces the
same sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Union

import numpy as np
from scipy.signal import lfilter

from .dist import DriftDiffusion
from .errors import ParameterError, StabilityError
from .ingest import ReturnSeries, normalize

MODELS = ("gaussian_iid", "student_t_iid", "fbm", "vol_cluster", "sde")

# fraction of Lamperti-coordinate steps allowed to overshoot the boundary
MAX_OVERSHOOT = 1e-3


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


@dataclass(frozen=True)
class SyntheticSpec:
    model: str
    n: int
    seed: int = 0
    params: Dict[str, Union[float, str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.model != "sde" and self.n < 2:
            raise ParameterError("n must be >= 2")
        p = self.params
        if self.model == "student_t_iid" and not p.get("nu", 0) > 2:
            raise ParameterError("student_t_iid needs nu > 2 (finite variance)")
        if self.model == "fbm" and not 0 < p.get("H", -1) < 1:
            raise ParameterError("fbm needs 0 < H < 1")

    def describe(self) -> str:
        kv = " ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"model={self.model} n={self.n} seed={self.seed} {kv}".strip()


def gen_iid(spec: SyntheticSpec) -> ReturnSeries:
    """iid unit-variance draws, Gaussian or Student-t.

    t draws are ``z / sqrt(chi2_nu / nu)`` scaled by ``sqrt((nu-2)/nu)``.
    """
    rng = make_rng(spec.seed)
    if spec.model == "gaussian_iid":
        x = rng.standard_normal(spec.n)
    elif spec.model == "student_t_iid":
        nu = float(spec.params["nu"])
        if not nu > 2:
            raise ParameterError("nu must exceed 2")
        z = rng.standard_normal(spec.n)
        chi2 = rng.chisquare(nu, spec.n)
        x = z / np.sqrt(chi2 / nu) * math.sqrt((nu - 2.0) / nu)
    else:
        raise ParameterError(f"gen_iid does not handle {spec.model!r}")
    return ReturnSeries.from_values(x)


def fgn_autocov(H: float, m: int) -> np.ndarray:
    """Autocovariance of unit fractional Gaussian noise at lags 0..m."""
    k = np.arange(m + 1, dtype=float)
    return 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))


def _fgn_circulant(H, m, rng):
    r = fgn_autocov(H, m)
    row = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        return None
    lam = np.clip(lam, 0.0, None)
    size = row.size
    w = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    y = np.fft.fft(np.sqrt(lam / size) * w)
    return y.real[:m]


def _fgn_hosking(H, m, rng):
    """Durbin-Levinson recursion, O(m^2); exact for any valid covariance."""
    r = fgn_autocov(H, m)
    z = rng.standard_normal(m)
    x = np.empty(m)
    phi = np.zeros(m)
    v = r[0]
    x[0] = math.sqrt(v) * z[0]
    for t in range(1, m):
        prev = phi[: t - 1].copy()
        k = (r[t] - np.dot(prev, r[1:t][::-1])) / v
        phi[: t - 1] = prev - k * prev[::-1]
        phi[t - 1] = k
        v *= 1.0 - k * k
        x[t] = np.dot(phi[:t], x[t - 1 :: -1]) + math.sqrt(v) * z[t]
    return x


def gen_fgn(H: float, m: int, seed: int, method: str = "auto") -> np.ndarray:
    if not 0 < H < 1:
        raise ParameterError(f"H must lie in (0, 1), got {H}")
    rng = make_rng(seed)
    if method in ("auto", "circulant"):
        x = _fgn_circulant(H, m, rng)
        if x is not None:
            return x
        if method == "circulant":
            raise StabilityError("circulant embedding not positive semi-definite")
    return _fgn_hosking(H, m, rng)


def gen_fbm(spec: SyntheticSpec, method: str = "auto") -> np.ndarray:
    """Fractional Brownian path on the unit grid; ``path[t] = B_H(t)``, ``path[0] = 0``.

    ``method``: ``"circulant"`` (exact, O(n log n)), ``"hosking"``, or
    ``"auto"`` which falls back to Hosking if the embedding has a negative
    eigenvalue.
    """
    H = float(spec.params.get("H", -1))
    if not 0 < H < 1:
        raise ParameterError(f"H must lie in (0, 1), got {H}")
    inc = gen_fgn(H, spec.n - 1, spec.seed, method)
    return np.concatenate([[0.0], np.cumsum(inc)])


def gen_vol_cluster(spec: SyntheticSpec) -> ReturnSeries:
    """Stochastic-volatility returns ``exp(h/2) z`` with AR(1) log-variance ``h``.

    ``h`` starts from its stationary law. Output is normalized.
    """
    phi = float(spec.params.get("phi", 0.98))
    sigma_v = float(spec.params.get("sigma_v", 0.2))
    if phi >= 1:
        raise ParameterError(f"phi={phi}: log-variance process is non-stationary")
    if not 0 <= phi:
        raise ParameterError("phi must be >= 0")
    if sigma_v < 0:
        raise ParameterError("sigma_v must be >= 0")
    rng = make_rng(spec.seed)
    z = rng.standard_normal(spec.n)
    w = rng.standard_normal(spec.n)
    h0 = rng.standard_normal() * sigma_v / math.sqrt(1 - phi * phi)
    h, _ = lfilter([1.0], [1.0, -phi], sigma_v * w, zi=[phi * h0])
    return normalize(ReturnSeries.from_values(np.exp(0.5 * h) * z))


def default_dt(dd: DriftDiffusion, target: float = 0.01) -> float:
    """Step size with ``dt * |drift slope at 0| = target`` in the simulated coordinate."""
    if dd.case == "i":
        slope = 1.0
    else:
        slope = abs(dd.coupling - 0.5 * dd.D) * 2.0 / dd.nu
    return target / slope if slope > 0 else target


def simulate_sde(
    case: str,
    nu: float = 3.0,
    D: float = 1.0,
    dt: float = None,
    n: int = 10**6,
    seed: int = 0,
    lam: float = 0.0,
    burn_in: int = 10_000,
    x0: float = 0.0,
) -> np.ndarray:
    """Euler-Maruyama path of ``dx = f dt + g eps`` (Ito), ``<eps eps'> = D delta``.

    Case "i" is stepped directly. For ``g = 1 + x^2/nu`` the scheme runs in
    the Lamperti coordinate ``y = sqrt(nu) arctan(x / sqrt(nu))``, where the
    noise is additive: ``dy = (f/g - D g'/2) dt + sqrt(D) dW``. Stepping x
    itself diverges within a few thousand steps because g grows
    quadratically. Rare steps that overshoot the bounded y range are
    reflected; too many of them raise :class:`StabilityError`.

    The first ``burn_in`` steps are discarded; ``n`` samples are returned.
    """
    dd = DriftDiffusion(case, nu=nu, D=D, lam=lam)
    if dt is None:
        dt = default_dt(dd)
    if not dt > 0:
        raise ParameterError("dt must be positive")
    if n == 0:
        return np.empty(0)
    total = n + burn_in
    rng = make_rng(seed)
    dw = rng.standard_normal(total) * math.sqrt(D * dt)

    if case == "i":
        if dt >= 2.0:
            raise StabilityError(f"Euler-Maruyama diverges for dt={dt} (need dt < 2)")
        # x_{k+1} = (1 - dt) x_k + dW_k
        path, _ = lfilter([1.0], [1.0, -(1.0 - dt)], dw, zi=[(1.0 - dt) * x0])
        return path[burn_in:]

    s = math.sqrt(nu)
    half = 0.5 * math.pi
    # y-drift is (lam - D/2) g'(x) = c * tan(u) in terms of u = y / s
    c = (dd.coupling - 0.5 * D) * 2.0 / s
    u = math.atan(x0 / s)
    tan = math.tan
    out = np.empty(total)
    overshoot = 0
    steps = dw.tolist()
    for i in range(total):
        u += (c * tan(u) * dt + steps[i]) / s
        if u >= half:
            u = math.pi - u
            overshoot += 1
        elif u <= -half:
            u = -math.pi - u
            overshoot += 1
        out[i] = u
    if overshoot > MAX_OVERSHOOT * total or not (-half < u < half):
        raise StabilityError(
            f"dt={dt}: {overshoot} of {total} steps left the state space; reduce dt"
        )
    return s * np.tan(out[burn_in:])
