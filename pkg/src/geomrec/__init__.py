"""Tail-index estimation from discretized geometric records.

The package turns a stream of positive observations into the discretized
sample of records and geometric near-records, estimates the tail index by
maximum likelihood, and ships the baselines (Hill, Berred), samplers and the
Monte Carlo harness used to validate the estimator.
"""

from .core import (
    Event,
    EventKind,
    Extractor,
    GeometricRecordSample,
    GeomRecordParams,
    RecordBlock,
    extract,
    read_observations,
)
from .errors import (
    AggregationError,
    DegenerateSampleError,
    DomainError,
    EmptySampleError,
    GeomRecError,
    MLENonexistenceError,
    OrderingError,
    ParameterError,
    TrialAbortedError,
)
from .estimators import (
    EstimateReport,
    HillTracker,
    asymptotic_sd,
    berred_b1,
    berred_b2,
    confidence_interval,
    effective_sampling_size,
    hill,
    mle_complete,
    mle_practical,
    normal_quantile,
)
from .distributions import ParentDistribution, parse_distribution

__version__ = "0.1.0"

__all__ = [
    "AggregationError",
    "DegenerateSampleError",
    "DomainError",
    "EmptySampleError",
    "EstimateReport",
    "Event",
    "EventKind",
    "Extractor",
    "GeomRecError",
    "GeomRecordParams",
    "GeometricRecordSample",
    "HillTracker",
    "MLENonexistenceError",
    "OrderingError",
    "ParameterError",
    "ParentDistribution",
    "RecordBlock",
    "TrialAbortedError",
    "asymptotic_sd",
    "berred_b1",
    "berred_b2",
    "confidence_interval",
    "effective_sampling_size",
    "extract",
    "hill",
    "mle_complete",
    "mle_practical",
    "normal_quantile",
    "parse_distribution",
    "read_observations",
]
