import math

import numpy as np
import pytest
from scipy import stats

from geomrec import AggregationError, GeomRecordParams, ParameterError, ParentDistribution
from geomrec.distributions import direct_generate_sums
from geomrec.estimators import asymptotic_sd, complete_beta, gamma_from_beta
from geomrec.montecarlo import (
    SUMMARY_HEADER,
    TrialConfig,
    clt_study,
    replicate,
    roughness,
    run_trial,
    trace_paths,
)

from oracles import exact_expected_estimate

PARETO2 = ParentDistribution("pareto", 2.0, 1.0)


def small_config(**kw):
    base = dict(
        dist=PARETO2,
        gamma_true=2.0,
        deltas=(0.8, 0.4),
        m=5,
        threshold_A=5.0,
        n_records=10,
        hill_ks=(5, 10),
        berred_ells=(3, 5),
    )
    base.update(kw)
    return TrialConfig(**base)


def test_config_validation():
    with pytest.raises(ParameterError):
        small_config(n_records=5, berred_ells=(5,))
    with pytest.raises(ParameterError):
        small_config(deltas=())
    with pytest.raises(ParameterError):
        small_config(deltas=(1.5,))
    with pytest.raises(ParameterError):
        small_config(hill_ks=(0,))


def test_cells_order():
    cfg = small_config()
    assert cfg.cells()[:2] == [("geometric", 0.8), ("geometric", 0.4)]
    assert len(cfg.cells()) == 2 + 2 + 2 + 2


def test_run_trial_deterministic():
    cfg = small_config()
    a = run_trial(cfg, 7, master_seed=3)
    b = run_trial(cfg, 7, master_seed=3)
    assert a == b
    assert run_trial(cfg, 8, master_seed=3).estimates != a.estimates


def test_replicate_independent_of_threads():
    cfg = small_config()
    one = replicate(cfg, 300, master_seed=5, threads=1)
    many = replicate(cfg, 300, master_seed=5, threads=4)
    assert one.to_csv() == many.to_csv()


def test_summary_csv_header():
    text = replicate(small_config(), 20, threads=1).to_csv()
    lines = text.splitlines()
    assert lines[0] == ",".join(SUMMARY_HEADER)
    assert len(lines) == 1 + len(small_config().cells())


def test_mse_decomposes():
    s = replicate(small_config(), 400, master_seed=1, threads=1)
    for c in s.cells:
        est = c.estimates
        var = float(np.mean((est - est.mean()) ** 2))
        assert c.mse == pytest.approx(var + (c.mean - 2.0) ** 2, abs=1e-9)
        assert c.reps + c.failures == 400


def test_median_ess_only_for_ess_estimators():
    s = replicate(small_config(), 50, threads=1)
    assert s.cell("geometric", 0.4).median_ess >= 10
    assert s.cell("hill", 5).median_ess >= 6
    assert s.cell("berred_b1", 3).median_ess is None


def test_all_trials_failing_raises():
    cfg = small_config(threshold_A=1e6, cap=2, hill_ks=(), berred_ells=())
    with pytest.raises(AggregationError):
        replicate(cfg, 5, threads=1)


def test_capped_trials_counted_as_failures():
    # a cap this small stops some trials only
    cfg = small_config(hill_ks=(), berred_ells=(), cap=60)
    s = replicate(cfg, 200, threads=1)
    assert 0 < s.trial_failures < 200
    assert s.cells[0].failures == s.trial_failures


def test_geometric_mean_matches_exact_expectation():
    g, d, m, n = 2.0, 0.6, 5, 10
    mean, mse = exact_expected_estimate(g, d, m, n)
    cfg = TrialConfig(PARETO2, g, (d,), m, 5.0, n)
    s = replicate(cfg, 4000, master_seed=21, threads=1).cells[0]
    se = math.sqrt(s.mse - (s.mean - g) ** 2) / math.sqrt(s.reps)
    assert abs(s.mean - mean) < 4 * se
    assert s.mse == pytest.approx(mse, rel=0.1)


def test_raw_stream_matches_direct_path():
    g, d, m, n = 1.0, 0.5, 5, 10
    dist = ParentDistribution("pareto", g, 1.0)
    s = replicate(TrialConfig(dist, g, (d,), m, 5.0, n), 10_000, master_seed=2, threads=1)
    rng = np.random.default_rng(77)
    sk, ss, sv = direct_generate_sums(g, d, m, n, rng, 10_000)
    direct = np.array([gamma_from_beta(complete_beta(n, m, v, k, t), d, m) for k, t, v in zip(sk, ss, sv)])
    assert stats.ks_2samp(s.cells[0].estimates, direct).pvalue > 0.01


def test_clt_study_keys_and_values():
    r = clt_study(2.0, 0.5, 5, 200, 500, master_seed=1)
    assert r["sigma"] == asymptotic_sd(2.0, 0.5, 5)
    assert 0.85 < r["coverage"] <= 1.0
    assert r["empirical_sd"] == pytest.approx(r["sigma"], rel=0.15)
    assert clt_study(2.0, 0.5, 5, 200, 500, master_seed=1) == r


def test_clt_bias_shrinks_with_n():
    errs = [abs(clt_study(2.0, 0.5, 5, n, 50_000, master_seed=3)["mean_gamma_hat"] - 2.0) for n in (50, 200, 800)]
    assert errs[0] > errs[1] > errs[2]


def test_clt_rejects_bad_args():
    with pytest.raises(ParameterError):
        clt_study(2.0, 0.5, 5, 0, 100)
    with pytest.raises(ParameterError):
        clt_study(2.0, 0.5, 5, 10, 1)


def test_trace_paths_monotone():
    t = trace_paths(ParentDistribution("loglogistic", 3.0), 10_000, GeomRecordParams(0.5, 5, 3.0), 2, 4)
    for name in ("geometric", "hill"):
        idx = [p.effective_index for p in t[name]]
        assert idx and all(a < b for a, b in zip(idx, idx[1:]))
        assert all(p.estimator == name for p in t[name])
        assert all(math.isfinite(p.estimate) and p.estimate > 0 for p in t[name])


def test_trace_sizes_order_of_magnitude():
    dist = ParentDistribution("loglogistic", 3.0)
    params = GeomRecordParams(0.5, 5, 3.0)
    geo, hil = [], []
    for seed in range(100):
        t = trace_paths(dist, 10_000, params, 2, seed)
        geo.append(len(t["geometric"]))
        hil.append(len(t["hill"]))
    assert 13 <= np.median(geo) <= 39
    assert 12 <= np.median(hil) <= 36


def test_roughness():
    from geomrec.montecarlo import TracePoint

    t = [TracePoint("x", i, v) for i, v in enumerate([1.0, 3.0, 2.0])]
    assert roughness(t) == pytest.approx(1.5)
    assert math.isnan(roughness(t[:1]))
