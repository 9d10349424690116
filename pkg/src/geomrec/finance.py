"""Price series ingestion, empirical survival diagnostics and delta scans."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .core import GeomRecordParams, extract
from .errors import DegenerateSampleError, DomainError, EmptySampleError, MLENonexistenceError, ParameterError
from .estimators import mle_practical

__all__ = [
    "ReturnSeries",
    "EsfFit",
    "ScanEntry",
    "InsufficientDataError",
    "prices_to_returns",
    "standardize",
    "read_price_csv",
    "esf_points",
    "esf_fit",
    "delta_scan",
]

MIN_FIT_POINTS = 10


class InsufficientDataError(EmptySampleError):
    """Too few usable points for a regression."""


@dataclass(frozen=True)
class ReturnSeries:
    timestamps: tuple
    y: np.ndarray
    z_abs: np.ndarray


def standardize(y) -> np.ndarray:
    """``(y - mean) / sd`` with the ``n - 1`` standard deviation."""
    y = np.asarray(y, dtype=np.float64)
    if y.size < 2:
        raise DegenerateSampleError("need at least two values to standardize")
    sd = float(np.std(y, ddof=1))
    if not sd > 0:
        raise DegenerateSampleError("constant series has zero standard deviation")
    return (y - y.mean()) / sd


def prices_to_returns(prices: Sequence[float], timestamps: Sequence | None = None) -> ReturnSeries:
    """Log-returns and absolute standardised returns of a price series.

    >>> r = prices_to_returns([1.0, math.e, 1.0])
    >>> [round(v, 12) for v in r.y]
    [1.0, -1.0]
    """
    x = np.asarray(prices, dtype=np.float64)
    if x.size < 3:
        raise ParameterError(f"need at least 3 prices, got {x.size}")
    if not np.all(x > 0):
        raise DomainError("prices must be positive")
    y = np.diff(np.log(x))
    z = standardize(y)
    ts = tuple(timestamps[1:]) if timestamps is not None else tuple(range(1, x.size))
    return ReturnSeries(ts, y, np.abs(z))


def read_price_csv(lines: Iterable[str]) -> tuple[list[str], list[float], int]:
    """Read ``date,close`` rows; returns dates, closes and the count of skipped rows."""
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty price file") from None
    cols = [h.strip().lower() for h in header]
    if "date" not in cols or "close" not in cols:
        raise ValueError(f"expected a header with date,close columns, got {header!r}")
    i_date, i_close = cols.index("date"), cols.index("close")
    dates: list[str] = []
    closes: list[float] = []
    skipped = 0
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        try:
            v = float(row[i_close])
        except (ValueError, IndexError):
            skipped += 1
            continue
        if not math.isfinite(v):
            skipped += 1
            continue
        dates.append(row[i_date].strip())
        closes.append(v)
    return dates, closes, skipped


@dataclass(frozen=True)
class EsfFit:
    points: np.ndarray  # columns: ln x, ln ESF(x)
    threshold: float
    slope: float
    intercept: float

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "slope": self.slope, "intercept": self.intercept}


def esf_points(values) -> np.ndarray:
    """``(ln x, ln ESF(x))`` at each sorted sample point, ESF counting strictly larger values.

    Points with zero survival are dropped.
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.size
    if n == 0:
        return np.empty((0, 2))
    greater = n - np.searchsorted(x, x, side="right")
    keep = (greater > 0) & (x > 0)
    return np.column_stack([np.log(x[keep]), np.log(greater[keep] / n)])


def esf_fit(values, threshold: float) -> EsfFit:
    """Least-squares line through the log-log survival points with ``x >= threshold``."""
    if not threshold > 0:
        raise ParameterError(f"threshold must be positive, got {threshold!r}")
    pts = esf_points(values)
    sel = pts[pts[:, 0] >= math.log(threshold)] if pts.size else pts
    if len(sel) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"only {len(sel)} usable points above {threshold!r}; need {MIN_FIT_POINTS}"
        )
    slope, intercept = np.polyfit(sel[:, 0], sel[:, 1], 1)
    return EsfFit(pts, float(threshold), float(slope), float(intercept))


class ScanEntry(NamedTuple):
    delta: float
    gamma_hat: float | None
    ci_low: float | None
    ci_high: float | None
    n_blocks: int


def delta_scan(
    z_abs,
    deltas: Sequence[float],
    m: int,
    A: float,
    alpha: float = 0.05,
    threads: int = 1,
) -> list[ScanEntry]:
    """Practical MLE with its interval for each delta, observations in time order.

    A delta at which the estimator does not exist yields an entry with the
    estimate fields set to ``None``.
    """
    # a zero return can never be a geometric record; dropping it keeps time order
    values = [v for v in np.asarray(z_abs, dtype=np.float64).tolist() if v > 0.0]
    grid = [float(d) for d in deltas]
    for d in grid:
        GeomRecordParams(d, m, A)

    def one(d: float) -> ScanEntry:
        try:
            sample = extract(values, GeomRecordParams(d, m, A))
        except EmptySampleError:
            return ScanEntry(d, None, None, None, 0)
        try:
            rep = mle_practical(sample, alpha)
        except MLENonexistenceError:
            return ScanEntry(d, None, None, None, sample.n_blocks)
        return ScanEntry(d, rep.gamma_hat, rep.ci_low, rep.ci_high, rep.n_blocks)

    if threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, grid))
    return [one(d) for d in grid]
