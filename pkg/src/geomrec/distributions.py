"""Parent distributions, geometric laws and the direct block generator.

Every parent exposes a scalar ``sf``/``isf`` pair written with plain libm
calls; the compiled stream kernel evaluates the very same expressions, so the
pure-Python path reproduces it bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GeometricRecordSample, GeomRecordParams, RecordBlock
from .errors import ParameterError

__all__ = [
    "ParentDistribution",
    "parse_distribution",
    "geom_star",
    "truncated_geometric",
    "trunc_geom_pmf",
    "trunc_geom_moments",
    "theoretical_moments",
    "direct_generate_block",
    "direct_generate_sample",
    "direct_generate_sums",
]

# kind -> (kernel code, number of parameters after gamma, default second parameter)
_KINDS = {
    "pareto": (0, 1, 1.0),
    "frechet": (1, 0, None),
    "loglogistic": (2, 0, None),
    "burr12": (3, 1, None),
    "dagum": (4, 1, None),
    "abst": (5, 0, None),
}
_ALIASES = {
    "log-logistic": "loglogistic",
    "burr": "burr12",
    "burrxii": "burr12",
    "student": "abst",
    "studentt": "abst",
    "t": "abst",
}


@dataclass(frozen=True)
class ParentDistribution:
    """Heavy-tailed parent with tail index ``gamma``.

    ``param`` is the scale ``D`` for ``pareto``, ``c`` for ``burr12`` and
    ``p`` for ``dagum``; it is ignored by the other kinds.
    """

    kind: str
    gamma: float
    param: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind.lower())
        if kind not in _KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        g, p = float(self.gamma), float(self.param)
        if not (g > 0 and math.isfinite(g)):
            raise ParameterError(f"gamma must be positive, got {self.gamma!r}")
        if not (p > 0 and math.isfinite(p)):
            raise ParameterError(f"parameter must be positive, got {self.param!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "param", p)

    @property
    def code(self) -> int:
        return _KINDS[self.kind][0]

    @property
    def has_kernel(self) -> bool:
        """Whether the compiled stream kernel supports this kind."""
        return self.code < 5

    @property
    def is_pareto(self) -> bool:
        return self.kind == "pareto"

    @property
    def lower_endpoint(self) -> float:
        return self.param if self.kind == "pareto" else 0.0

    def label(self) -> str:
        if _KINDS[self.kind][1]:
            return f"{self.kind}:{self.gamma!r},{self.param!r}"
        return f"{self.kind}:{self.gamma!r}"

    def sf(self, x: float) -> float:
        g, c = self.gamma, self.param
        kind = self.kind
        if kind == "pareto":
            if x <= c:
                return 1.0
            return math.pow(x / c, -g)
        if x <= 0.0:
            return 1.0
        if kind == "frechet":
            return -math.expm1(-math.pow(x, -g))
        if kind == "loglogistic":
            return 1.0 / (1.0 + math.pow(x, g))
        if kind == "burr12":
            return math.pow(1.0 + math.pow(x, g / c), -c)
        if kind == "dagum":
            return -math.expm1(-c * math.log1p(math.pow(x, -g)))
        from scipy.special import stdtr

        return 2.0 * float(stdtr(g, -x))

    def isf(self, s: float) -> float:
        """Inverse survival function on ``(0, 1]``."""
        g, c = self.gamma, self.param
        kind = self.kind
        if kind == "pareto":
            return c * math.pow(s, -1.0 / g)
        if kind == "frechet":
            return math.pow(-math.log1p(-s), -1.0 / g)
        if kind == "loglogistic":
            return math.pow((1.0 - s) / s, 1.0 / g)
        if kind == "burr12":
            return math.pow(math.expm1(-math.log(s) / c), c / g)
        if kind == "dagum":
            return math.pow(math.expm1(-math.log1p(-s) / c), -1.0 / g)
        from scipy.special import stdtrit

        return -float(stdtrit(g, 0.5 * s))

    def cdf(self, x):
        """Vectorised distribution function."""
        x = np.asarray(x, dtype=float)
        g, c = self.gamma, self.param
        with np.errstate(divide="ignore", over="ignore"):
            if self.kind == "pareto":
                out = np.where(x <= c, 0.0, 1.0 - (np.maximum(x, c) / c) ** -g)
            elif self.kind == "frechet":
                out = np.where(x <= 0, 0.0, np.exp(-np.maximum(x, 0) ** -g))
            elif self.kind == "loglogistic":
                xp = np.maximum(x, 0.0) ** g
                out = xp / (1.0 + xp)
            elif self.kind == "burr12":
                out = 1.0 - (1.0 + np.maximum(x, 0.0) ** (g / c)) ** -c
            elif self.kind == "dagum":
                out = np.where(x <= 0, 0.0, (1.0 + np.maximum(x, 0) ** -g) ** -c)
            else:
                from scipy.special import stdtr

                out = np.where(x <= 0, 0.0, 1.0 - 2.0 * stdtr(g, -np.maximum(x, 0.0)))
        return out

    def sample(self, rng: np.random.Generator, size=None):
        """Draw by inversion; ``|t|`` uses a normal over root-chi-square mix."""
        g, c = self.gamma, self.param
        if self.kind == "abst":
            z = rng.standard_normal(size)
            w = rng.chisquare(g, size)
            return np.abs(z / np.sqrt(w / g))
        u = 1.0 - rng.random(size)  # survival level in (0, 1]
        if self.kind == "pareto":
            return c * u ** (-1.0 / g)
        if self.kind == "frechet":
            return (-np.log1p(-u)) ** (-1.0 / g)
        if self.kind == "loglogistic":
            return ((1.0 - u) / u) ** (1.0 / g)
        if self.kind == "burr12":
            return np.expm1(-np.log(u) / c) ** (c / g)
        return np.expm1(-np.log1p(-u) / c) ** (-1.0 / g)


def parse_distribution(text: str) -> ParentDistribution:
    """Parse ``kind:gamma[,param]``, e.g. ``pareto:2,1`` or ``frechet:3``."""
    kind, sep, rest = text.strip().partition(":")
    if not sep or not rest:
        raise ParameterError(f"expected kind:params, got {text!r}")
    kind = _ALIASES.get(kind.strip().lower(), kind.strip().lower())
    if kind not in _KINDS:
        raise ParameterError(f"unknown distribution kind {kind!r}")
    try:
        vals = [float(v) for v in rest.split(",")]
    except ValueError:
        raise ParameterError(f"cannot parse parameters in {text!r}") from None
    _, extra, default = _KINDS[kind]
    if len(vals) == 1 and extra == 1:
        if default is None:
            raise ParameterError(f"{kind} needs two parameters, got {text!r}")
        vals.append(default)
    if len(vals) != 1 + extra:
        raise ParameterError(f"{kind} takes {1 + extra} parameter(s), got {text!r}")
    return ParentDistribution(kind, *vals)


def geom_star(p: float, rng: np.random.Generator, size=None):
    """Geom*(p) on ``{0, 1, ...}`` by inversion ``floor(ln u / ln(1-p))``."""
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"success probability must lie in (0, 1], got {p!r}")
    u = 1.0 - rng.random(size)
    if p == 1.0:
        return np.zeros_like(u, dtype=np.int64) if size is not None else 0
    out = np.floor(np.log(u) / math.log1p(-p))
    return out.astype(np.int64) if size is not None else int(out)


def truncated_geometric(p: float, n: int, rng: np.random.Generator, size=None):
    """Geom*(p) conditioned on ``{0, ..., n}``, by inversion of the truncated CDF."""
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"success probability must lie in (0, 1], got {p!r}")
    if n < 0:
        raise ParameterError(f"support bound must be >= 0, got {n!r}")
    u = rng.random(size)
    if p == 1.0 or n == 0:
        return np.zeros_like(u, dtype=np.int64) if size is not None else 0
    log_q = math.log1p(-p)
    mass = -math.expm1((n + 1) * log_q)  # 1 - q**(n+1)
    out = np.floor(np.log1p(-u * mass) / log_q)
    out = np.minimum(out, n)
    return out.astype(np.int64) if size is not None else int(out)


def trunc_geom_pmf(p: float, n: int) -> np.ndarray:
    q = 1.0 - p
    j = np.arange(n + 1)
    w = p * q**j
    return w / w.sum()


def trunc_geom_moments(p: float, n: int) -> tuple[float, float]:
    """Mean and variance of Geom*(p) truncated to ``{0, ..., n}``."""
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0, 1), got {p!r}")
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n!r}")
    if n == 0:
        return 0.0, 0.0
    q = 1.0 - p
    if p * (n + 1) < 0.05:
        # closed-form variance cancels as 12 / (p * (n + 1))**2; sum the few terms instead
        w = [q**j for j in range(n + 1)]
        tot = math.fsum(w)
        mean = math.fsum(j * wj for j, wj in enumerate(w)) / tot
        var = math.fsum((j - mean) ** 2 * wj for j, wj in enumerate(w)) / tot
        return mean, var
    # 1 - q**(n+1) via expm1: the subtraction cancels badly for small p
    log_qn = (n + 1) * math.log1p(-p)
    qn = math.exp(log_qn)
    tail = -math.expm1(log_qn)
    mean = q / p - (n + 1) * qn / tail
    var = q / p**2 - (n + 1) ** 2 * qn / tail**2
    return mean, var


def theoretical_moments(gamma: float, delta: float, m: int) -> dict[str, float]:
    """Block-level moments under an exact Pareto parent."""
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma!r}")
    GeomRecordParams(delta, m)
    dg = delta**gamma
    beta = delta ** (gamma / m)
    tail = delta ** (gamma * (1.0 - 1.0 / m))
    return {
        "E_S": (1.0 - dg) / dg,
        "E_K": beta / (1.0 - beta),
        "E_sumV": (1.0 - dg) / ((1.0 - beta) * tail) - m,
        "Var_U": 1.0 / ((1.0 - beta) ** 2 * tail),
    }


def direct_generate_block(
    gamma: float,
    delta: float,
    m: int,
    rng: np.random.Generator,
    previous_record: float = 1.0,
) -> RecordBlock:
    """One closed block drawn from its exact law under a Pareto parent.

    The record value is synthesised from ``previous_record``: the jump factor
    is ``a**K`` times a draw of the conditional Pareto ratio inside that
    subinterval.
    """
    beta = delta ** (gamma / m)
    k = int(geom_star(1.0 - beta, rng))
    s = int(geom_star(delta**gamma, rng))
    v = truncated_geometric(1.0 - beta, m - 1, rng, s).tolist() if s else []
    w = rng.random()
    a = delta ** (-1.0 / m)
    inner = (1.0 - w * (1.0 - beta)) ** (-1.0 / gamma)
    return RecordBlock(previous_record * a**k * inner, k, v, True)


def direct_generate_sample(
    gamma: float,
    delta: float,
    m: int,
    n_blocks: int,
    rng: np.random.Generator,
    threshold_A: float = 1.0,
) -> GeometricRecordSample:
    """``n_blocks`` closed blocks, the first jump measured from ``threshold_A``."""
    params = GeomRecordParams(delta, m, threshold_A)
    blocks = []
    prev = threshold_A if threshold_A > 0 else 1.0
    for _ in range(n_blocks):
        b = direct_generate_block(gamma, delta, m, rng, prev)
        blocks.append(b)
        prev = b.record_value
    return GeometricRecordSample(params, tuple(blocks), 0, True)


def direct_generate_sums(
    gamma: float,
    delta: float,
    m: int,
    n_blocks: int,
    rng: np.random.Generator,
    reps: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sufficient statistics ``(sum K, sum S, sum V)`` for ``reps`` samples of ``n_blocks``.

    Sums of Geom* variables are negative binomial, so only the near-record
    indices are drawn one by one.
    """
    beta = delta ** (gamma / m)
    sum_k = rng.negative_binomial(n_blocks, 1.0 - beta, size=reps).astype(np.int64)
    sum_s = rng.negative_binomial(n_blocks, delta**gamma, size=reps).astype(np.int64)
    total = int(sum_s.sum())
    v = truncated_geometric(1.0 - beta, m - 1, rng, total)
    owner = np.repeat(np.arange(reps), sum_s)
    sum_v = np.bincount(owner, weights=v, minlength=reps).astype(np.int64)
    return sum_k, sum_s, sum_v
