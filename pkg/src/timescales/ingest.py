"""Price-file parsing and log-return construction.

Prices are read from delimiter-separated text into an immutable
:class:`PriceSeries`. Returns at time scale ``m * base_interval`` are built
from non-overlapping windows by default, which keeps the samples handed to
the likelihood fits independent for iid increments.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Optional, TextIO, Union

import numpy as np

from .errors import (
    DegenerateSeriesError,
    EmptySeriesError,
    OrderingError,
    ParameterError,
    ParseError,
)

Column = Union[str, int]


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    symbol: str
    base_interval: float
    timestamps: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        ts = _frozen(self.timestamps)
        px = _frozen(self.prices)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", px)
        if ts.ndim != 1 or ts.shape != px.shape:
            raise ParameterError("timestamps and prices must be 1-d and of equal length")
        if len(px) < 2:
            raise EmptySeriesError(f"price series needs at least 2 samples, got {len(px)}")
        if not np.all(np.isfinite(px)) or np.any(px <= 0):
            raise ParameterError("prices must be finite and strictly positive")
        if np.any(np.diff(ts) <= 0):
            raise OrderingError("timestamps must be strictly increasing")
        if not self.base_interval > 0:
            raise ParameterError("base_interval must be positive")

    def __len__(self):
        return len(self.prices)

    @classmethod
    def from_prices(cls, prices, base_interval: float = 300.0, symbol: str = "", t0: float = 0.0):
        """Regular grid starting at ``t0``."""
        prices = np.asarray(prices, dtype=float)
        ts = t0 + base_interval * np.arange(len(prices), dtype=float)
        return cls(symbol, float(base_interval), ts, prices)

    @classmethod
    def from_returns(cls, values, scale: float = 1e-3, p0: float = 100.0, **kwargs):
        """Price path ``p0 * exp(scale * cumsum(values))`` with ``len(values) + 1`` points."""
        path = np.concatenate([[0.0], np.cumsum(np.asarray(values, dtype=float))])
        return cls.from_prices(p0 * np.exp(scale * path), **kwargs)

    def log_path(self) -> np.ndarray:
        """Cumulative log-price relative to the first sample."""
        return np.log(self.prices / self.prices[0])


@dataclass(frozen=True)
class ReturnSeries:
    dt: float
    values: np.ndarray
    normalized: bool = False
    sample_mean: float = field(default=float("nan"))
    sample_std: float = field(default=float("nan"))
    starts: Optional[np.ndarray] = None

    def __post_init__(self):
        vals = _frozen(self.values)
        object.__setattr__(self, "values", vals)
        if self.starts is not None:
            starts = _frozen(self.starts)
            if starts.shape != vals.shape:
                raise ParameterError("starts must align with values")
            object.__setattr__(self, "starts", starts)
        if len(vals):
            if math.isnan(self.sample_mean):
                object.__setattr__(self, "sample_mean", float(vals.mean()))
            if math.isnan(self.sample_std):
                object.__setattr__(self, "sample_std", float(vals.std()))

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_values(cls, values, dt: float = 1.0, normalized: bool = False):
        return cls(float(dt), np.asarray(values, dtype=float), normalized)

    def aggregate(self, m: int) -> "ReturnSeries":
        """Sum ``m`` consecutive returns (non-overlapping); trailing remainder dropped."""
        if m < 1:
            raise ParameterError("aggregation factor must be >= 1")
        k = len(self.values) // m
        if k == 0:
            raise EmptySeriesError(f"aggregation by {m} leaves no returns")
        vals = self.values[: k * m].reshape(k, m).sum(axis=1)
        starts = None if self.starts is None else self.starts[: k * m : m]
        return ReturnSeries(self.dt * m, vals, False, starts=starts)


@dataclass(frozen=True)
class ColumnSpec:
    """Which columns hold time and price.

    Names imply a header row; integer indices imply none unless ``header``
    says otherwise. Lines starting with ``comment`` are ignored.
    """

    time: Column = 0
    price: Column = 1
    delimiter: str = ","
    header: Optional[bool] = None
    comment: str = "#"

    @property
    def has_header(self) -> bool:
        if self.header is not None:
            return self.header
        return isinstance(self.time, str) or isinstance(self.price, str)


def parse_timestamp(text: str) -> float:
    """Epoch seconds or ISO-8601 (naive values are taken as UTC)."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _resolve(col: Column, header: Optional[list], line: int) -> int:
    if isinstance(col, int):
        return col
    if header is None:
        raise ParseError(f"column {col!r} named but input has no header", line)
    names = [h.strip() for h in header]
    if col not in names:
        raise ParseError(f"column {col!r} not in header {names}", line)
    return names.index(col)


def parse_prices(
    stream: Union[TextIO, Iterable[str], str],
    schema: ColumnSpec = ColumnSpec(),
    symbol: str = "",
    base_interval: Optional[float] = None,
) -> PriceSeries:
    """Read ``(timestamp, price)`` records into a :class:`PriceSeries`.

    ``base_interval`` defaults to the smallest spacing between consecutive
    timestamps, so missing samples show up as longer spans, not as a coarser
    grid.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream, delimiter=schema.delimiter)
    ti = pi = None
    header = None
    want_header = schema.has_header
    ts, px = [], []
    for lineno, row in enumerate(reader, start=1):
        if not row or (row[0].lstrip().startswith(schema.comment)):
            continue
        if want_header and header is None:
            header = row
            continue
        if ti is None:
            ti = _resolve(schema.time, header, lineno)
            pi = _resolve(schema.price, header, lineno)
        try:
            t = parse_timestamp(row[ti])
            p = float(row[pi])
        except (IndexError, ValueError) as exc:
            raise ParseError(f"malformed record {row!r} ({exc})", lineno) from None
        if not (p > 0 and math.isfinite(p)):
            raise ParseError(f"price must be positive, got {row[pi].strip()!r}", lineno)
        if ts and t <= ts[-1]:
            raise OrderingError(f"line {lineno}: timestamp {row[ti].strip()!r} not after previous")
        ts.append(t)
        px.append(p)
    if len(px) < 2:
        raise EmptySeriesError(f"need at least 2 price records, found {len(px)}")
    ts_arr = np.array(ts)
    if base_interval is None:
        base_interval = float(np.diff(ts_arr).min())
    return PriceSeries(symbol, float(base_interval), ts_arr, np.array(px))


def _fmt_time(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


def write_prices(series: PriceSeries, stream: TextIO, delimiter: str = ",", comment: Optional[str] = None):
    """Inverse of :func:`parse_prices` with named columns; floats keep full precision."""
    if comment:
        stream.write(f"# {comment}\n")
    stream.write(f"timestamp{delimiter}price\n")
    for t, p in zip(series.timestamps.tolist(), series.prices.tolist()):
        stream.write(f"{_fmt_time(t)}{delimiter}{p!r}\n")


def write_returns(returns: ReturnSeries, stream: TextIO, delimiter: str = ",", comment: Optional[str] = None):
    if comment:
        stream.write(f"# {comment}\n")
    stream.write(f"timestamp_start{delimiter}value\n")
    starts = returns.starts
    if starts is None:
        starts = returns.dt * np.arange(len(returns))
    for t, v in zip(starts.tolist(), returns.values.tolist()):
        stream.write(f"{_fmt_time(t)}{delimiter}{v!r}\n")


def log_returns(series: PriceSeries, m: int, overlap: bool = False, max_gap: Optional[float] = None) -> ReturnSeries:
    """Log-returns over ``m`` base intervals.

    Non-overlapping by default: ``values[j] = ln(p[(j+1)m] / p[jm])``.
    With ``overlap`` the stride is 1 (for display only; the samples are
    correlated). ``max_gap`` drops every return whose window contains a
    spacing larger than ``max_gap * base_interval``.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ParameterError(f"m must be a positive integer, got {m!r}")
    n = len(series)
    if m >= n:
        raise EmptySeriesError(f"m={m} leaves no returns from {n} prices")
    px = series.prices
    step = 1 if overlap else m
    start = np.arange(0, n - m, step)
    values = np.log(px[start + m] / px[start])
    starts = series.timestamps[start]
    if max_gap is not None:
        big = np.diff(series.timestamps) > max_gap * series.base_interval
        # windows [i, i+m) of spacings containing any large gap
        csum = np.concatenate([[0], np.cumsum(big)])
        keep = (csum[start + m] - csum[start]) == 0
        values, starts = values[keep], starts[keep]
        if len(values) == 0:
            raise EmptySeriesError("session filter removed every return")
    return ReturnSeries(float(m * series.base_interval), values, False, starts=starts)


def normalize(returns: ReturnSeries) -> ReturnSeries:
    """Standardize to zero mean and unit population variance.

    Already-normalized input is returned unchanged, so the operation is
    idempotent exactly rather than up to rounding.
    """
    if returns.normalized:
        return returns
    vals = returns.values
    if len(vals) == 0:
        raise EmptySeriesError("cannot normalize an empty series")
    mu = vals.mean()
    sd = vals.std()
    if not sd > 0:
        raise DegenerateSeriesError("zero variance: cannot normalize")
    z = (vals - mu) / sd
    # second pass removes the O(eps) residual mean left by the first
    z = z - z.mean()
    z = z / z.std()
    return ReturnSeries(returns.dt, z, True, float(mu), float(sd), returns.starts)
