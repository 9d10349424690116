"""Pure-Python raw-stream trial, the reference for ``_kernel.pyx``.

Observations that cannot change any tracked quantity are skipped in bulk:
below ``tau = min(min(delta) * R, h)``, where ``h`` is the smallest value of
the running top set once it is full, an arrival is neither a geometric
record for any delta nor a top-set entrant.  The number of skipped
arrivals before the next relevant one is Geom*(sf(tau)) and the relevant
arrival itself is drawn from the parent conditioned on ``x > tau``.
Both implementations consume the generator in the same order: one uniform
for the skip (only when ``sf(tau) < 1``), then one for the value.
"""

from __future__ import annotations

import math

import numpy as np

STATUS_OK = 0
STATUS_CAP = 1
STATUS_STALLED = 2


def _index(ratio: float, log_a: float, upper: int) -> int:
    t = math.log(ratio) / log_a
    if math.isinf(t):
        return upper
    j = math.ceil(t) - 1
    if j < 0:
        return 0
    return upper if j > upper else j


def simulate_stream(dist, A, deltas, m, n_records, ks, cap, rng):
    deltas = [float(d) for d in deltas]
    ks = [int(k) for k in ks]
    nd, nk = len(deltas), len(ks)
    log_a = [-math.log(d) / m for d in deltas]
    dmin = min(deltas)
    keep = max(ks) + 1 if ks else 0
    huge = 1 << 62
    sum_k = [0] * nd
    sum_s = [0] * nd
    sum_v = [0] * nd
    ess = [0] * nk
    top: list[float] = []  # descending
    records: list[float] = []
    random = rng.random
    sf, isf = dist.sf, dist.isf

    def result(status, raw, draws):
        return (
            status,
            np.array(records, dtype=np.float64),
            np.array(sum_k, dtype=np.int64),
            np.array(sum_s, dtype=np.int64),
            np.array(sum_v, dtype=np.int64),
            np.array(top, dtype=np.float64),
            np.array(ess, dtype=np.int64),
            float(raw),
            draws,
        )

    p_act = sf(A) if A > 0.0 else 1.0
    if not p_act > 0.0:
        return result(STATUS_STALLED, 0.0, 0)
    draws = 0
    while True:
        if draws >= cap:
            return result(STATUS_CAP, 0.0, draws)
        u = random()
        draws += 1
        x = isf((1.0 - u) * p_act)
        if x > A:
            break
    for j in range(nd):
        sum_k[j] = _index(x / A, log_a[j], huge) if A > 0.0 else 0
    records.append(x)
    if keep:
        top.append(x)
        for i in range(nk):
            ess[i] += 1
    raw = 1.0
    R = x

    while True:
        tau = dmin * R
        if keep:
            if len(top) < keep:
                tau = 0.0
            elif top[-1] < tau:
                tau = top[-1]
        p = sf(tau)
        if not p > 0.0:
            return result(STATUS_STALLED, raw, draws)
        if draws >= cap:
            return result(STATUS_CAP, raw, draws)
        if p < 1.0:
            u = random()
            raw += math.floor(math.log(1.0 - u) / math.log1p(-p))
        u = random()
        draws += 1
        raw += 1.0
        x = isf((1.0 - u) * p)

        if keep:
            g = 0
            while g < len(top) and top[g] > x:
                g += 1
            for i in range(nk):
                if g <= ks[i]:
                    ess[i] += 1
            if g < keep:
                top.insert(g, x)
                if len(top) > keep:
                    top.pop()

        if x > R:
            records.append(x)
            if len(records) > n_records:
                return result(STATUS_OK, raw, draws)
            for j in range(nd):
                sum_k[j] += _index(x / R, log_a[j], huge)
            R = x
        else:
            for j in range(nd):
                low = deltas[j] * R
                if x > low:
                    sum_s[j] += 1
                    sum_v[j] += _index(x / low, log_a[j], m - 1)
