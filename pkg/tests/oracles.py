"""Independent reference computations used by the tests.

Nothing here calls the package's estimators: each oracle recomputes its
quantity from first principles (likelihood maximisation, brute-force sums,
high-precision arithmetic, bisection, exact enumeration).
"""

from __future__ import annotations

import math
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def loglik_complete(gamma, delta, m, n, sum_v, sum_k, sum_s):
    """Log-likelihood of ``n`` closed blocks under a Pareto parent, as a function of gamma."""
    return (n + (sum_v + sum_k) / m) * gamma * math.log(delta) + (n + sum_s) * math.log1p(
        -(delta ** (gamma / m))
    )


def loglik_practical(gamma, delta, m, n, sum_v, sum_k, sum_s):
    """Same, with the last block's near-record count only known as a lower bound."""
    return (n - 1 + (sum_v + sum_k) / m) * gamma * math.log(delta) + (n + sum_s) * math.log1p(
        -(delta ** (gamma / m))
    )


def golden_section_max(f, lo, hi, tol=1e-13, max_iter=400):
    """Maximiser of a unimodal ``f`` on ``[lo, hi]``, searched on the log scale."""
    a, b = math.log(lo), math.log(hi)
    g = lambda t: f(math.exp(t))  # noqa: E731
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = g(c), g(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = g(d)
    return math.exp(0.5 * (a + b))


def sigma_high_precision(gamma, delta, m, digits=50) -> Decimal:
    getcontext().prec = digits
    g, d, mm = Decimal(repr(gamma)), Decimal(repr(delta)), Decimal(m)
    ln_d = d.ln()
    beta = (g / mm * ln_d).exp()
    tail = (g / 2 * (1 - 1 / mm) * ln_d).exp()
    return mm * (1 - beta) * tail / (-ln_d)


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile_bisect(p: float) -> float:
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def trunc_geom_bruteforce(p: float, n: int) -> tuple[float, float]:
    q = Fraction(1) - Fraction(p)
    w = [Fraction(p) * q**j for j in range(n + 1)]
    tot = sum(w)
    mean = sum(j * wj for j, wj in enumerate(w)) / tot
    second = sum(j * j * wj for j, wj in enumerate(w)) / tot
    return float(mean), float(second - mean * mean)


def _negbin_pmf(r: int, p: float, size: int) -> np.ndarray:
    """pmf of the number of failures before the ``r``-th success, on ``0..size-1``."""
    j = np.arange(size)
    logp = (
        np.array([math.lgamma(r + x) - math.lgamma(r) - math.lgamma(x + 1) for x in j])
        + r * math.log(p)
        + j * math.log1p(-p)
    )
    return np.exp(logp)


def exact_expected_estimate(gamma, delta, m, n, tail_eps=1e-13):
    """Exact mean and MSE of the complete-block MLE under a Pareto parent.

    Sum K and sum S are negative binomial; given sum S = s, sum V is the
    s-fold convolution of the truncated geometric law on ``0..m-1``.  The
    estimate depends on ``(sum V + sum K, sum S)`` only.
    """
    beta = delta ** (gamma / m)
    ps = delta**gamma
    size_k = 64
    while _negbin_pmf(n, 1 - beta, size_k).sum() < 1 - tail_eps:
        size_k *= 2
    size_s = 64
    while _negbin_pmf(n, ps, size_s).sum() < 1 - tail_eps:
        size_s *= 2
    pk = _negbin_pmf(n, 1 - beta, size_k)
    pss = _negbin_pmf(n, ps, size_s)
    v1 = np.array([(1 - beta) * beta**j for j in range(m)])
    v1 /= v1.sum()
    mean = second = 0.0
    vs = np.array([1.0])  # law of sum V given s near-records
    for s in range(size_s):
        if s:
            vs = np.convolve(vs, v1)
        t = np.convolve(pk, vs)  # law of sum V + sum K
        tv = np.arange(t.size)
        num = m * n + tv
        est = m * np.log(num / (num + n + s)) / math.log(delta)
        mean += pss[s] * float(np.dot(t, est))
        second += pss[s] * float(np.dot(t, (est - gamma) ** 2))
    return mean, second
