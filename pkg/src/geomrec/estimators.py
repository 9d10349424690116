"""Tail-index estimators.

The geometric-record MLE works on the reparametrisation ``beta = delta**(gamma/m)``:
the likelihood of the discretized sample is ``beta**a * (1-beta)**b`` with
integer exponents, so the maximiser is the ratio ``a / (a + b)``.  Two
variants differ only in how the last block is treated:

* complete: every block is closed (its next record was seen),
* practical: the last block may still gain near-records, so its count only
  enters as a lower bound.

Hill's estimator and Berred's record-based estimators are provided as
baselines.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

from .core import GeometricRecordSample
from .errors import (
    DegenerateSampleError,
    EmptySampleError,
    MLENonexistenceError,
    OrderingError,
    ParameterError,
)

__all__ = [
    "EstimateReport",
    "complete_beta",
    "practical_beta",
    "gamma_from_beta",
    "mle_complete",
    "mle_practical",
    "asymptotic_sd",
    "normal_quantile",
    "confidence_interval",
    "hill",
    "hill_from_sample",
    "HillTracker",
    "berred_b1",
    "berred_b2",
    "effective_sampling_size",
]

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class EstimateReport:
    gamma_hat: float
    sigma_hat: float | None
    ci_low: float | None
    ci_high: float | None
    alpha: float | None
    n_blocks: int
    effective_sampling_size: int
    variant: str

    def to_dict(self) -> dict:
        ci = None if self.ci_low is None else [self.ci_low, self.ci_high]
        return {
            "gamma_hat": self.gamma_hat,
            "sigma_hat": self.sigma_hat,
            "ci": ci,
            "alpha": self.alpha,
            "n_blocks": self.n_blocks,
            "ess": self.effective_sampling_size,
            "variant": self.variant,
        }


def complete_beta(n: int, m: int, sum_v: int, sum_k: int, sum_s: int) -> float:
    """MLE of ``delta**(gamma/m)`` from ``n`` closed blocks."""
    if n < 1:
        raise EmptySampleError("the complete-block MLE needs at least one closed block")
    num = m * n + sum_v + sum_k
    return num / (num + n + sum_s)


def practical_beta(n: int, m: int, sum_v: int, sum_k: int, sum_s: int) -> float:
    """MLE of ``delta**(gamma/m)`` when the last of ``n`` blocks may be open."""
    if n < 1:
        raise EmptySampleError("the practical MLE needs at least one block")
    num = m * (n - 1) + sum_v + sum_k
    if num <= 0:
        raise MLENonexistenceError(
            "single open block with no near-record index and K_1 = 0: likelihood is maximised at beta = 0"
        )
    return num / (num + n + sum_s)


def gamma_from_beta(beta: float, delta: float, m: int) -> float:
    return m * math.log(beta) / math.log(delta)


def asymptotic_sd(gamma: float, delta: float, m: int) -> float:
    """Asymptotic standard deviation of ``sqrt(n) * (gamma_hat - gamma)``."""
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma!r}")
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m!r}")
    log_d = math.log(delta)
    # 1 - delta**(gamma/m) via expm1 keeps precision for small gamma/m
    one_minus_beta = -math.expm1(gamma / m * log_d)
    return m * one_minus_beta * math.exp(0.5 * gamma * (1.0 - 1.0 / m) * log_d) / (-log_d)


def normal_quantile(p: float) -> float:
    """``p``-quantile of the standard normal distribution."""
    if not 0.0 < p < 1.0:
        raise ParameterError(f"probability must lie in (0, 1), got {p!r}")
    return _STD_NORMAL.inv_cdf(p)


def confidence_interval(
    gamma_hat: float, n_blocks: int, delta: float, m: int, alpha: float = 0.05
) -> tuple[float, float]:
    """Asymptotic ``1 - alpha`` interval ``gamma_hat -/+ z * sigma(gamma_hat) / sqrt(n)``.

    ``alpha = 1`` is accepted as the degenerate limit and returns the point.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    if n_blocks < 1:
        raise EmptySampleError("confidence interval needs at least one block")
    z = 0.0 if alpha == 1.0 else normal_quantile(1.0 - alpha / 2.0)
    half = z * asymptotic_sd(gamma_hat, delta, m) / math.sqrt(n_blocks)
    return gamma_hat - half, gamma_hat + half


def _report(
    beta: float, n: int, ess: int, sample: GeometricRecordSample, alpha: float | None, variant: str
) -> EstimateReport:
    delta, m = sample.params.delta, sample.params.m
    g = gamma_from_beta(beta, delta, m)
    sigma = asymptotic_sd(g, delta, m)
    lo = hi = None
    if alpha is not None:
        lo, hi = confidence_interval(g, n, delta, m, alpha)
    return EstimateReport(g, sigma, lo, hi, alpha, n, ess, variant)


def mle_complete(sample: GeometricRecordSample, alpha: float | None = 0.05) -> EstimateReport:
    """Geometric-record MLE on the closed blocks of ``sample``.

    A trailing open block is dropped.
    """
    blocks = [b for b in sample.blocks if b.complete]
    n = len(blocks)
    if n == 0:
        raise EmptySampleError("no closed block: the next record has not been observed yet")
    sum_v = sum(b.sum_v for b in blocks)
    sum_k = sum(b.k_index for b in blocks)
    sum_s = sum(b.near_record_count for b in blocks)
    beta = complete_beta(n, sample.params.m, sum_v, sum_k, sum_s)
    return _report(beta, n, n + sum_s, sample, alpha, "complete")


def mle_practical(sample: GeometricRecordSample, alpha: float | None = 0.05) -> EstimateReport:
    """Geometric-record MLE treating the last block as possibly unfinished."""
    n = sample.n_blocks
    if n == 0:
        raise EmptySampleError("empty sample")
    beta = practical_beta(n, sample.params.m, sample.sum_v, sample.sum_k, sample.sum_s)
    return _report(beta, n, n + sample.sum_s, sample, alpha, "practical")


def hill(top_values: Sequence[float], k: int | None = None) -> float:
    """Hill's estimator from the ``k+1`` largest observations, largest first."""
    if k is None:
        k = len(top_values) - 1
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k!r}")
    if len(top_values) < k + 1:
        raise ParameterError(f"need k+1 = {k + 1} values, got {len(top_values)}")
    top = [float(x) for x in top_values[: k + 1]]
    if any(not x > 0 for x in top):
        raise ParameterError("order statistics must be positive")
    if any(top[i] < top[i + 1] for i in range(k)):
        raise ParameterError("top values must be in non-increasing order")
    log_ref = math.log(top[k])
    total = math.fsum(math.log(x) - log_ref for x in top[:k])
    if total <= 0.0:
        raise DegenerateSampleError("all top order statistics coincide")
    return k / total


def hill_from_sample(values: Sequence[float], k: int) -> float:
    """Hill's estimator on an unsorted sample."""
    if len(values) < k + 1:
        raise ParameterError(f"sample of {len(values)} values is too small for k={k}")
    top = sorted(values, reverse=True)[: k + 1]
    return hill(top, k)


class HillTracker:
    """Running top-``(k+1)`` set with measured-unit accounting.

    An arrival counts as measured when, on arrival, fewer than ``k+1``
    earlier observations exceed it, i.e. it ranks within the running
    top-``(k+1)``.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ParameterError(f"k must be >= 1, got {k!r}")
        self.k = k
        self._kept: list[float] = []  # ascending
        self.ess = 0
        self.count = 0

    def push(self, x: float) -> bool:
        self.count += 1
        kept = self._kept
        greater = len(kept) - bisect.bisect_right(kept, x)
        if greater > self.k:
            return False
        bisect.insort(kept, x)
        if len(kept) > self.k + 1:
            del kept[0]
        self.ess += 1
        return True

    @property
    def ready(self) -> bool:
        return len(self._kept) == self.k + 1

    @property
    def top_values(self) -> list[float]:
        return self._kept[::-1]

    def estimate(self) -> float | None:
        if not self.ready:
            return None
        return hill(self.top_values, self.k)


def berred_b1(records: Sequence[float], ell: int) -> float:
    """Berred's first estimator from ``R_n`` and ``R_{n-ell}``.

    ``records`` ends with ``R_n``; entry ``-(ell+1)`` is ``R_{n-ell}``.
    """
    if ell < 1:
        raise ParameterError(f"ell must be >= 1, got {ell!r}")
    if len(records) < ell + 1:
        raise ParameterError(f"need at least ell+1 = {ell + 1} records, got {len(records)}")
    r_n, r_prev = float(records[-1]), float(records[-1 - ell])
    if not r_n > r_prev:
        raise OrderingError(f"R_n = {r_n} must exceed R_(n-ell) = {r_prev}")
    return ell / math.log(r_n / r_prev)


def berred_b2(records: Sequence[float], ell: int, n: int | None = None) -> float:
    """Berred's second estimator from the last ``ell`` records.

    ``records`` ends with ``R_n``; ``n`` (the index of that record) defaults to
    ``len(records)``.  Uses absolute log-records, so it is not scale invariant.
    """
    if n is None:
        n = len(records)
    if ell < 1 or n < ell:
        raise ParameterError(f"need n >= ell >= 1, got n={n}, ell={ell}")
    if len(records) < ell:
        raise ParameterError(f"need the last {ell} records, got {len(records)}")
    total = math.fsum(math.log(float(r)) for r in records[-ell:])
    if total <= 0.0:
        raise DegenerateSampleError("sum of log-records must be positive")
    return (n * ell - ell * (ell - 1) / 2) / total


def effective_sampling_size(source) -> int:
    """Measured units behind an estimate.

    For a geometric-record sample: records plus near-records.  For a
    ``HillTracker``: arrivals that entered the running top-``(k+1)``.
    """
    if isinstance(source, GeometricRecordSample):
        return source.effective_sampling_size
    if isinstance(source, HillTracker):
        return source.ess
    raise TypeError(f"cannot compute an effective sampling size for {type(source).__name__}")
