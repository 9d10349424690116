"""Replication engine: raw-stream trials, summaries, CLT studies and traces."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import EventKind, Extractor, GeomRecordParams
from .distributions import ParentDistribution, direct_generate_sums
from .errors import (
    AggregationError,
    DegenerateSampleError,
    MLENonexistenceError,
    OrderingError,
    ParameterError,
    TrialAbortedError,
)
from .estimators import (
    HillTracker,
    asymptotic_sd,
    berred_b1,
    berred_b2,
    complete_beta,
    gamma_from_beta,
    hill,
    normal_quantile,
    practical_beta,
)
from .kernel import STATUS_CAP, STATUS_OK, simulate_stream

__all__ = [
    "TrialConfig",
    "TrialOutcome",
    "CellSummary",
    "SimulationSummary",
    "TracePoint",
    "rep_generator",
    "default_threads",
    "run_trial",
    "replicate",
    "clt_study",
    "trace_paths",
    "roughness",
    "SUMMARY_HEADER",
]

SUMMARY_HEADER = ["dist", "gamma", "estimator", "param", "mean", "mse", "median_ess", "reps", "failures"]
DEFAULT_CAP = 10**8


def rep_generator(master_seed: int, rep_index: int) -> np.random.Generator:
    """Independent stream for one replication."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, rep_index])))


def default_threads() -> int:
    env = os.environ.get("GEOMREC_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ParameterError(f"GEOMREC_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ParameterError("GEOMREC_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class TrialConfig:
    """One simulation cell block: a parent, a set of deltas and tuning grids.

    All deltas, Hill ``k`` values and Berred ``ell`` values are evaluated on
    the same realised stream.  ``cap`` bounds the number of materialised
    draws per trial.
    """

    dist: ParentDistribution
    gamma_true: float
    deltas: tuple[float, ...]
    m: int = 5
    threshold_A: float = 5.0
    n_records: int = 10
    hill_ks: tuple[int, ...] = ()
    berred_ells: tuple[int, ...] = ()
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "hill_ks", tuple(int(k) for k in self.hill_ks))
        object.__setattr__(self, "berred_ells", tuple(int(e) for e in self.berred_ells))
        if not self.deltas:
            raise ParameterError("at least one delta is required")
        for d in self.deltas:
            GeomRecordParams(d, self.m, self.threshold_A)
        if self.n_records < 1:
            raise ParameterError(f"n_records must be >= 1, got {self.n_records}")
        if any(k < 1 for k in self.hill_ks):
            raise ParameterError("Hill k values must be >= 1")
        if any(e < 1 for e in self.berred_ells):
            raise ParameterError("Berred ell values must be >= 1")
        if self.berred_ells and self.n_records < max(self.berred_ells) + 1:
            raise ParameterError("n_records must be at least max(ell) + 1")
        if self.cap < 1:
            raise ParameterError("cap must be >= 1")

    @property
    def params(self) -> list[GeomRecordParams]:
        return [GeomRecordParams(d, self.m, self.threshold_A) for d in self.deltas]

    def cells(self) -> list[tuple[str, float | int]]:
        out: list[tuple[str, float | int]] = [("geometric", d) for d in self.deltas]
        out += [("hill", k) for k in self.hill_ks]
        out += [("berred_b1", e) for e in self.berred_ells]
        out += [("berred_b2", e) for e in self.berred_ells]
        return out


class TrialOutcome(NamedTuple):
    """Estimates of one trial keyed by ``(estimator, param)``; NaN marks a failure."""

    estimates: dict
    ess: dict
    raw_count: float
    draws: int


def run_trial(
    config: TrialConfig, rep_index: int, master_seed: int = 0, backend: str | None = None
) -> TrialOutcome:
    """Simulate one raw stream and evaluate every estimator on it."""
    rng = rep_generator(master_seed, rep_index)
    res = simulate_stream(
        config.dist,
        config.threshold_A,
        config.deltas,
        config.m,
        config.n_records,
        config.hill_ks,
        config.cap,
        rng,
        backend,
    )
    if res.status != STATUS_OK:
        why = "draw cap exceeded" if res.status == STATUS_CAP else "parent survival underflowed"
        raise TrialAbortedError(f"replication {rep_index}: {why}")

    n = config.n_records
    estimates: dict = {}
    ess: dict = {}
    for j, d in enumerate(config.deltas):
        s = int(res.sum_s[j])
        beta = complete_beta(n, config.m, int(res.sum_v[j]), int(res.sum_k[j]), s)
        estimates[("geometric", d)] = gamma_from_beta(beta, d, config.m)
        ess[("geometric", d)] = n + s
    top = res.top.tolist()
    for i, k in enumerate(config.hill_ks):
        try:
            estimates[("hill", k)] = hill(top, k)
        except (DegenerateSampleError, ParameterError):
            estimates[("hill", k)] = math.nan
        ess[("hill", k)] = int(res.hill_ess[i])
    records = res.records[:n].tolist()
    for e in config.berred_ells:
        try:
            estimates[("berred_b1", e)] = berred_b1(records, e)
        except OrderingError:
            estimates[("berred_b1", e)] = math.nan
        try:
            estimates[("berred_b2", e)] = berred_b2(records, e, n)
        except DegenerateSampleError:
            estimates[("berred_b2", e)] = math.nan
    return TrialOutcome(estimates, ess, res.raw_count, res.draws)


@dataclass(frozen=True)
class CellSummary:
    estimator: str
    param: float | int
    mean: float
    mse: float
    median_ess: int | None
    reps: int
    failures: int
    estimates: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class SimulationSummary:
    config: TrialConfig
    master_seed: int
    reps: int
    trial_failures: int
    cells: tuple[CellSummary, ...]

    def cell(self, estimator: str, param) -> CellSummary:
        for c in self.cells:
            if c.estimator == estimator and c.param == param:
                return c
        raise KeyError((estimator, param))

    def rows(self) -> list[list[str]]:
        label = self.config.dist.label()
        out = []
        for c in self.cells:
            out.append(
                [
                    label,
                    repr(self.config.gamma_true),
                    c.estimator,
                    repr(c.param),
                    repr(c.mean),
                    repr(c.mse),
                    "" if c.median_ess is None else str(c.median_ess),
                    str(c.reps),
                    str(c.failures),
                ]
            )
        return out

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(SUMMARY_HEADER)
        w.writerows(self.rows())
        return buf.getvalue()


def _lower_median(values: Sequence[int]) -> int:
    s = sorted(values)
    return s[(len(s) - 1) // 2]


def replicate(
    config: TrialConfig,
    reps: int,
    master_seed: int = 0,
    threads: int | None = None,
    backend: str | None = None,
) -> SimulationSummary:
    """Run ``reps`` trials and aggregate mean, MSE and median ESS per cell.

    Results are gathered by replication index, so the summary does not depend
    on ``threads``.
    """
    if reps < 1:
        raise ParameterError(f"reps must be >= 1, got {reps}")
    threads = threads or default_threads()

    def one(i: int) -> TrialOutcome | None:
        try:
            return run_trial(config, i, master_seed, backend)
        except TrialAbortedError:
            return None

    if threads == 1:
        outcomes = [one(i) for i in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, range(reps), chunksize=64))

    done = [o for o in outcomes if o is not None]
    trial_failures = reps - len(done)
    if not done:
        raise AggregationError(f"all {reps} trials failed")

    cells = []
    for key in config.cells():
        est = np.array([o.estimates[key] for o in done], dtype=np.float64)
        ok = est[np.isfinite(est)]
        failures = trial_failures + int(est.size - ok.size)
        if ok.size == 0:
            raise AggregationError(f"every trial failed for {key[0]} at {key[1]!r}")
        mean = math.fsum(ok.tolist()) / ok.size
        mse = math.fsum(((ok - config.gamma_true) ** 2).tolist()) / ok.size
        med = None
        if key in done[0].ess:
            med = _lower_median([o.ess[key] for o, e in zip(done, est) if math.isfinite(e)])
        cells.append(CellSummary(key[0], key[1], mean, mse, med, int(ok.size), failures, ok))
    return SimulationSummary(config, master_seed, reps, trial_failures, tuple(cells))


def clt_study(
    gamma: float,
    delta: float,
    m: int,
    n_blocks: int,
    reps: int,
    master_seed: int = 0,
    alpha: float = 0.05,
) -> dict:
    """Spread of ``sqrt(n) * (gamma_hat - gamma)`` and CI coverage over direct samples."""
    if reps < 2:
        raise ParameterError("reps must be >= 2")
    if n_blocks < 1:
        raise ParameterError("n_blocks must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed])))
    sum_k, sum_s, sum_v = direct_generate_sums(gamma, delta, m, n_blocks, rng, reps)
    num = m * n_blocks + sum_v + sum_k
    beta = num / (num + n_blocks + sum_s)
    g_hat = m * np.log(beta) / math.log(delta)
    err = math.sqrt(n_blocks) * (g_hat - gamma)
    z = normal_quantile(1.0 - alpha / 2.0)
    log_d = math.log(delta)
    sig_hat = m * -np.expm1(g_hat / m * log_d) * np.exp(0.5 * g_hat * (1 - 1 / m) * log_d) / -log_d
    half = z * sig_hat / math.sqrt(n_blocks)
    covered = (g_hat - half < gamma) & (gamma < g_hat + half)
    return {
        "gamma": gamma,
        "delta": delta,
        "m": m,
        "n_blocks": n_blocks,
        "reps": reps,
        "alpha": alpha,
        "mean_gamma_hat": float(np.mean(g_hat)),
        "empirical_sd": float(np.std(err, ddof=1)),
        "sigma": asymptotic_sd(gamma, delta, m),
        "coverage": float(np.mean(covered)),
    }


class TracePoint(NamedTuple):
    estimator: str
    effective_index: int
    estimate: float


def trace_paths(
    dist: ParentDistribution,
    n_raw: int,
    params: GeomRecordParams,
    hill_k: int,
    master_seed: int = 0,
) -> dict[str, list[TracePoint]]:
    """Estimates as functions of the effective sampling size along one stream.

    Points before the practical MLE exists are skipped, as are Hill points
    before ``k+1`` observations are available.
    """
    if n_raw < 1:
        raise ParameterError("n_raw must be >= 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed])))
    values = dist.sample(rng, n_raw)
    ex = Extractor(params)
    tracker = HillTracker(hill_k)
    geo: list[TracePoint] = []
    hil: list[TracePoint] = []
    n = sum_k = sum_s = sum_v = 0
    for x in values.tolist():
        ev = ex.push(x)
        if ev.kind is EventKind.IGNORED:
            continue
        if ev.kind in (EventKind.ACTIVATED, EventKind.NEW_RECORD):
            n += 1
            sum_k += ev.index
        elif ev.kind is EventKind.NEAR_RECORD:
            sum_s += 1
            sum_v += ev.index
        if ev.kind is not EventKind.BELOW_THRESHOLD:
            try:
                beta = practical_beta(n, params.m, sum_v, sum_k, sum_s)
                geo.append(TracePoint("geometric", n + sum_s, gamma_from_beta(beta, params.delta, params.m)))
            except MLENonexistenceError:
                pass
        if tracker.push(x) and tracker.ready:
            try:
                hil.append(TracePoint("hill", tracker.ess, tracker.estimate()))
            except DegenerateSampleError:
                pass
    return {"geometric": geo, "hill": hil}


def roughness(trace: Sequence[TracePoint]) -> float:
    """Mean absolute successive difference of the estimates along a trace."""
    if len(trace) < 2:
        return math.nan
    est = np.array([p.estimate for p in trace])
    return float(np.mean(np.abs(np.diff(est))))
