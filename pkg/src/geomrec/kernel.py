"""Backend selection for the raw-stream trial.

The compiled extension is used when it imports and supports the parent;
``GEOMREC_PURE_PYTHON=1`` forces the pure-Python implementation.  Both give
identical results for the same generator state.
"""

from __future__ import annotations

import os
from typing import NamedTuple, Sequence

import numpy as np

from . import _fallback
from .distributions import ParentDistribution

try:
    if os.environ.get("GEOMREC_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _kernel
except ImportError:
    _kernel = None

BACKEND = "compiled" if _kernel is not None else "python"

STATUS_OK = _fallback.STATUS_OK
STATUS_CAP = _fallback.STATUS_CAP
STATUS_STALLED = _fallback.STATUS_STALLED


class StreamResult(NamedTuple):
    """Outcome of one raw-stream trial.

    ``records`` holds the post-activation records (the last one closes the
    final block); ``sum_*`` are per-delta totals over the closed blocks;
    ``top`` is the running top set in descending order; ``hill_ess`` is per k.
    """

    status: int
    records: np.ndarray
    sum_k: np.ndarray
    sum_s: np.ndarray
    sum_v: np.ndarray
    top: np.ndarray
    hill_ess: np.ndarray
    raw_count: float
    draws: int


def simulate_stream(
    dist: ParentDistribution,
    A: float,
    deltas: Sequence[float],
    m: int,
    n_records: int,
    ks: Sequence[int],
    cap: int,
    rng: np.random.Generator,
    backend: str | None = None,
) -> StreamResult:
    """Run one trial until the ``n_records + 1``-th post-activation record."""
    if not len(deltas):
        raise ValueError("at least one delta is required")
    use = backend or BACKEND
    if use == "compiled" and (_kernel is None or not dist.has_kernel):
        use = "python"
    if use == "compiled":
        out = _kernel.simulate_stream(
            dist.code,
            dist.gamma,
            dist.param,
            float(A),
            np.ascontiguousarray(deltas, dtype=np.float64),
            int(m),
            int(n_records),
            np.ascontiguousarray(ks, dtype=np.int64),
            int(cap),
            rng.bit_generator,
        )
    else:
        out = _fallback.simulate_stream(dist, float(A), deltas, int(m), int(n_records), ks, int(cap), rng)
    return StreamResult(*out)
