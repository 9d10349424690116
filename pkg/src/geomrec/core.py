"""Streaming extraction of discretized geometric records.

An observation ``x`` is a *geometric record* when it exceeds ``delta`` times
the running maximum ``M``; it is a *record* when ``x > M`` and a *geometric
near-record* when ``delta*M < x <= M``.  The extractor keeps only integer
summaries of those observations:

* ``k_index`` of every record, the index of the geometric subinterval
  ``(a**k R_prev, a**(k+1) R_prev]`` holding the jump from the previous record,
* for every record, the subinterval indices ``v`` of its near-records inside
  ``(a**v delta R, a**(v+1) delta R]``, ``v = 0..m-1``,

with ``a = delta**(-1/m)``.  Sampling only starts at the first observation
above the threshold ``A``; the first jump is measured from ``A``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DomainError, EmptySampleError, ParameterError

__all__ = [
    "GeomRecordParams",
    "RecordBlock",
    "GeometricRecordSample",
    "EventKind",
    "Event",
    "Extractor",
    "subinterval_index",
    "extract",
    "read_observations",
]


@dataclass(frozen=True)
class GeomRecordParams:
    """Discretization parameters ``(delta, m, A)``."""

    delta: float
    m: int
    threshold_A: float = 0.0

    def __post_init__(self):
        delta = float(self.delta)
        if not (0.0 < delta < 1.0) or math.isnan(delta):
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta!r}")
        if int(self.m) != self.m or self.m < 2:
            raise ParameterError(f"m must be an integer >= 2, got {self.m!r}")
        A = float(self.threshold_A)
        if not A >= 0.0 or math.isinf(A):
            raise ParameterError(f"threshold_A must be finite and >= 0, got {self.threshold_A!r}")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "threshold_A", A)

    @property
    def a(self) -> float:
        return self.delta ** (-1.0 / self.m)

    @property
    def log_a(self) -> float:
        return -math.log(self.delta) / self.m


def subinterval_index(ratio: float, log_a: float, upper: int | None = None) -> int:
    """Index ``j`` with ``a**j < ratio <= a**(j+1)``, clamped to ``[0, upper]``.

    Exact hits on a boundary ``a**j`` belong to the lower subinterval, which
    is what ``ceil(log_a(ratio)) - 1`` yields.
    """
    if math.isinf(ratio):
        raise OverflowError("ratio overflows; pass log_ratio instead")
    return index_from_log(math.log(ratio), log_a, upper)


def index_from_log(log_ratio: float, log_a: float, upper: int | None = None) -> int:
    j = math.ceil(log_ratio / log_a) - 1
    if j < 0:
        j = 0
    if upper is not None and j > upper:
        j = upper
    return j


@dataclass
class RecordBlock:
    """One record together with the indices of its geometric near-records."""

    record_value: float
    k_index: int
    v_indices: list[int] = field(default_factory=list)
    complete: bool = False

    @property
    def near_record_count(self) -> int:
        return len(self.v_indices)

    @property
    def sum_v(self) -> int:
        return sum(self.v_indices)

    def to_dict(self) -> dict:
        return {
            "r": self.record_value,
            "k": self.k_index,
            "s": self.near_record_count,
            "v": list(self.v_indices),
        }


@dataclass(frozen=True)
class GeometricRecordSample:
    """The discretized sample ``(K, S, V)`` organised per record block.

    Only the last block can be incomplete: its near-records are final once
    the next record has been seen.
    """

    params: GeomRecordParams
    blocks: tuple[RecordBlock, ...]
    raw_count: int = 0
    activated: bool = True

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def record_values(self) -> list[float]:
        return [b.record_value for b in self.blocks]

    @property
    def k(self) -> list[int]:
        return [b.k_index for b in self.blocks]

    @property
    def s(self) -> list[int]:
        return [b.near_record_count for b in self.blocks]

    @property
    def sum_k(self) -> int:
        return sum(b.k_index for b in self.blocks)

    @property
    def sum_s(self) -> int:
        return sum(b.near_record_count for b in self.blocks)

    @property
    def sum_v(self) -> int:
        return sum(b.sum_v for b in self.blocks)

    @property
    def effective_sampling_size(self) -> int:
        """Geometric records (records plus near-records) in the sample."""
        return self.n_blocks + self.sum_s

    def complete_part(self) -> "GeometricRecordSample":
        """The sample restricted to its closed blocks."""
        blocks = tuple(b for b in self.blocks if b.complete)
        return GeometricRecordSample(self.params, blocks, self.raw_count, self.activated)

    def scaled(self, c: float) -> "GeometricRecordSample":
        blocks = tuple(
            RecordBlock(b.record_value * c, b.k_index, list(b.v_indices), b.complete)
            for b in self.blocks
        )
        params = GeomRecordParams(self.params.delta, self.params.m, self.params.threshold_A * c)
        return GeometricRecordSample(params, blocks, self.raw_count, self.activated)

    def to_dict(self) -> dict:
        return {
            "delta": self.params.delta,
            "m": self.params.m,
            "A": self.params.threshold_A,
            "blocks": [b.to_dict() for b in self.blocks],
            "raw_count": self.raw_count,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "GeometricRecordSample":
        params = GeomRecordParams(data["delta"], data["m"], data["A"])
        raw = data["blocks"]
        blocks = []
        for i, b in enumerate(raw):
            v = [int(x) for x in b["v"]]
            if len(v) != int(b["s"]):
                raise ValueError(f"block {i}: s={b['s']} but {len(v)} v indices")
            if any(x < 0 or x >= params.m for x in v):
                raise ValueError(f"block {i}: v index outside 0..{params.m - 1}")
            # only the trailing block may be open
            blocks.append(RecordBlock(float(b["r"]), int(b["k"]), v, i < len(raw) - 1))
        return cls(params, tuple(blocks), int(data.get("raw_count", 0)), bool(blocks))

    @classmethod
    def from_json(cls, text: str) -> "GeometricRecordSample":
        return cls.from_dict(json.loads(text))


class EventKind(enum.Enum):
    IGNORED = "ignored"
    ACTIVATED = "activated"
    NEW_RECORD = "new_record"
    NEAR_RECORD = "near_record"
    BELOW_THRESHOLD = "below_geometric_threshold"


class Event(NamedTuple):
    kind: EventKind
    index: int | None = None


class Extractor:
    """Single-writer state machine turning observations into record blocks.

    >>> ex = Extractor(GeomRecordParams(0.25, 2, 5.0))
    >>> [ex.push(x).kind.value for x in (6, 9, 20)]
    ['activated', 'new_record', 'new_record']
    >>> ex.finalize().k
    [0, 0, 1]
    """

    def __init__(self, params: GeomRecordParams, debug: bool = False):
        if not isinstance(params, GeomRecordParams):
            raise ParameterError("params must be a GeomRecordParams instance")
        self.params = params
        self.debug = debug
        self._log_a = params.log_a
        self._max: float | None = None
        self._blocks: list[RecordBlock] = []
        self._raw_count = 0
        self._near_values: list[list[float]] = []

    @property
    def activated(self) -> bool:
        return bool(self._blocks)

    @property
    def current_max(self) -> float | None:
        """Running maximum, ``None`` before any observation."""
        return self._max

    @property
    def current_record(self) -> float | None:
        return self._blocks[-1].record_value if self._blocks else None

    @property
    def raw_count(self) -> int:
        return self._raw_count

    @property
    def blocks(self) -> list[RecordBlock]:
        return self._blocks

    def push(self, x: float) -> Event:
        x = float(x)
        if not x > 0.0:
            raise DomainError(f"observations must be positive, got {x!r}")
        if self._max is None or x > self._max:
            self._max = x

        if not self._blocks:
            A = self.params.threshold_A
            if x <= A:
                return Event(EventKind.IGNORED)
            k = 0
            if A > 0:
                ratio = x / A
                if math.isinf(ratio):  # subnormal A
                    k = index_from_log(math.log(x) - math.log(A), self._log_a)
                else:
                    k = subinterval_index(ratio, self._log_a)
            self._open_block(x, k)
            self._raw_count = 1
            return Event(EventKind.ACTIVATED, k)

        self._raw_count += 1
        R = self._blocks[-1].record_value
        if x > R:
            k = subinterval_index(x / R, self._log_a)
            self._blocks[-1].complete = True
            self._open_block(x, k)
            return Event(EventKind.NEW_RECORD, k)
        low = self.params.delta * R
        if x > low:
            v = subinterval_index(x / low, self._log_a, self.params.m - 1)
            self._blocks[-1].v_indices.append(v)
            if self.debug:
                self._check_near(x, v, low)
                self._near_values[-1].append(x)
            return Event(EventKind.NEAR_RECORD, v)
        return Event(EventKind.BELOW_THRESHOLD)

    def extend(self, values: Iterable[float]) -> None:
        for x in values:
            self.push(x)

    def finalize(self) -> GeometricRecordSample:
        if not self._blocks:
            raise EmptySampleError("no observation exceeded the threshold A")
        blocks = tuple(
            RecordBlock(b.record_value, b.k_index, list(b.v_indices), b.complete)
            for b in self._blocks
        )
        return GeometricRecordSample(self.params, blocks, self._raw_count, True)

    def _open_block(self, x: float, k: int) -> None:
        self._blocks.append(RecordBlock(x, k))
        if self.debug:
            self._near_values.append([])

    def _check_near(self, x: float, v: int, low: float) -> None:
        a = self.params.a
        lo, hi = a**v * low, a ** (v + 1) * low
        slack = 1e-12 * hi
        if not (lo - slack < x <= hi + slack):
            raise AssertionError(f"near-record {x} outside ({lo}, {hi}] for v={v}")


def extract(values: Iterable[float], params: GeomRecordParams) -> GeometricRecordSample:
    """Run an extractor over ``values`` and return the finalized sample.

    Same result as pushing every value, but values that cannot be geometric
    records (at most ``delta`` times the running maximum before them) are
    filtered out with numpy first and only counted.
    """
    x = np.asarray(values if isinstance(values, np.ndarray) else list(values), dtype=np.float64)
    if x.ndim != 1:
        raise ParameterError("observations must form a 1-d sequence")
    if x.size and not np.all(x > 0.0):
        bad = x[~(x > 0.0)][0]
        raise DomainError(f"observations must be positive, got {float(bad)!r}")
    above = np.flatnonzero(x > params.threshold_A)
    if above.size == 0:
        raise EmptySampleError("no observation exceeded the threshold A")
    start = int(above[0])
    tail = x[start:]
    prev_max = np.maximum.accumulate(tail)
    keep = np.ones(tail.size, dtype=bool)
    keep[1:] = tail[1:] > params.delta * prev_max[:-1]
    ex = Extractor(params)
    ex.extend(tail[keep].tolist())
    ex._raw_count = int(tail.size)
    return ex.finalize()


def read_observations(lines: Iterable[str]) -> list[float]:
    """Parse the plain-text observation format.

    One decimal per line; blank lines and lines starting with ``#`` are
    skipped.  Raises ``ValueError`` naming the offending line.
    """
    out = []
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            out.append(float(text))
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {text!r} as a number") from None
    return out
