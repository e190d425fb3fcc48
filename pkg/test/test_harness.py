import json
import math

import numpy as np
import pytest

from distlearn.core import FamilySpec
from distlearn.estimators import EstimatorKind
from distlearn.harness import (TailPoint, _exceeds, clopper_pearson_lower, clopper_pearson_upper, expectation_theory,
                               kl_unbounded_to_json, report_to_json, run_expectation, run_failure_rate, run_kl_unbounded_demo,
                               run_tail_curve, run_trials, tail_curve_report, tail_curve_to_csv, tail_curve_to_json,
                               wilson_interval)
from distlearn.settings import ExperimentSettings
from distlearn.utils import InvalidConfig, dump_json

def uniform(k: int) -> FamilySpec:
    return FamilySpec("uniform", k)

def test_clopper_pearson_upper():
    assert clopper_pearson_upper(0, 100) == pytest.approx(1.0 - 0.05 ** (1.0 / 100.0))
    assert clopper_pearson_upper(100, 100) == 1.0
    uppers = [clopper_pearson_upper(x, 50) for x in range(51)]
    assert uppers == sorted(uppers)
    assert all(x / 50 <= u for x, u in zip(range(51), uppers))
    with pytest.raises(ValueError):
        clopper_pearson_upper(5, 4)

def test_clopper_pearson_lower():
    assert clopper_pearson_lower(0, 100) == 0.0
    assert clopper_pearson_lower(100, 100) == pytest.approx(0.05 ** (1.0 / 100.0))
    assert clopper_pearson_lower(1, 5000) == pytest.approx(1.0 - 0.95 ** (1.0 / 5000.0))
    lowers = [clopper_pearson_lower(x, 50) for x in range(51)]
    assert lowers == sorted(lowers)
    assert all(lo <= x / 50 <= clopper_pearson_upper(x, 50) for x, lo in zip(range(51), lowers))
    with pytest.raises(ValueError):
        clopper_pearson_lower(-1, 4)

def test_tail_point_verdict():
    # A single exceedance in 5000 trials is consistent with a bound of order 1e-5
    rare = TailPoint(0.15, 1, 5000, 1.32455e-05)
    assert rare.empirical_tail == 0.0002
    assert rare.empirical_lower < 1.32455e-05
    assert rare.holds
    assert not TailPoint(0.1, 10, 5000, 1e-5).holds
    assert TailPoint(0.1, 0, 5000, 0.0).holds
    assert TailPoint(0.1, 5000, 5000, None).holds

def test_exceedance_ties():
    values = np.array([0.10000000000000003, 0.1, 0.09999999999999998, 0.2])
    assert _exceeds("tv", values, 0.1).tolist() == [False, False, False, True]
    assert _exceeds("kolmogorov", values, 0.1).tolist() == [False, False, False, True]
    assert _exceeds("kl", values, 0.1).tolist() == [True, True, True, True]
    assert _exceeds("hellinger", values, 0.10000000000000003).tolist() == [True, True, True, True]

def test_wilson_interval():
    low, high = wilson_interval(5, 10)
    assert low + high == pytest.approx(1.0)
    assert low < 0.5 < high
    low, high = wilson_interval(0, 10)
    assert low == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < high < 0.35

def test_run_trials_is_independent_of_threads():
    settings = ExperimentSettings(dist=FamilySpec("zipf", 10, {"exponent": 1.0}), metric="hellinger", n=50, trials=203, base_seed=17)
    single = run_trials(settings.overlay(ExperimentSettings(threads=1)).resolve())
    multi = run_trials(settings.overlay(ExperimentSettings(threads=4)).resolve())
    assert single.shape == (203,)
    assert np.array_equal(single, multi)

def test_reports_are_independent_of_threads():
    outputs = []
    for threads in (1, 3):
        config = ExperimentSettings(mode="failure-rate", dist=uniform(5), metric="tv", n=100, eps=0.1, delta=0.05,
                                    trials=300, base_seed=7, threads=threads).resolve()
        outputs.append(dump_json(report_to_json(run_failure_rate(config))))
    assert outputs[0] == outputs[1]
    assert "threads" not in json.loads(outputs[0])["config"]

def test_different_seeds_differ():
    settings = ExperimentSettings(dist=uniform(10), metric="tv", n=20, trials=50)
    a = run_trials(settings.overlay(ExperimentSettings(base_seed=1)).resolve())
    b = run_trials(settings.overlay(ExperimentSettings(base_seed=2)).resolve())
    assert not np.array_equal(a, b)

def test_expectation_point_mass():
    config = ExperimentSettings(mode="expectation", dist=FamilySpec("point_mass", 5), metric="tv", n=30, trials=100).resolve()
    report = run_expectation(config)
    assert report.mean == 0.0
    assert report.std_err == 0.0
    assert report.passed
    assert report.generator == "PCG64"

def test_expectation_tv():
    config = ExperimentSettings(mode="expectation", dist=uniform(10), metric="tv", n=1000, trials=500, base_seed=3).resolve()
    report = run_expectation(config)
    assert report.theory["expected_tv_bound"] == pytest.approx(0.05)
    assert report.mean is not None and report.mean < 0.05
    assert report.verdict["mean <= expected_tv_bound"]
    assert report.ci95 is not None and report.ci95[0] <= report.mean <= report.ci95[1]

def test_expectation_l2_squared_matches_exact():
    config = ExperimentSettings(mode="expectation", dist=uniform(10), metric="l2", squared=True, n=100, trials=2000, base_seed=5).resolve()
    report = run_expectation(config)
    assert report.theory["expected_l2_sq_exact"] == pytest.approx(0.009)
    assert report.mean is not None and report.std_err is not None
    assert abs(report.mean - 0.009) <= 5.0 * report.std_err

def test_expectation_l2_squared_non_uniform():
    config = ExperimentSettings(mode="expectation", dist=FamilySpec("zipf", 5, {"exponent": 1.0}), metric="l2", squared=True,
                                n=40, trials=3000, base_seed=8).resolve()
    report = run_expectation(config)
    exact = report.theory["expected_l2_sq_exact"]
    assert exact is not None and report.mean is not None and report.std_err is not None
    assert abs(report.mean - exact) <= 5.0 * report.std_err
    assert report.passed

def test_expectation_theory_selection():
    def theory(**kwargs):
        config = ExperimentSettings(dist=uniform(4), n=16, **kwargs).resolve()
        return set(expectation_theory(config, config.distribution()))
    assert theory(metric="tv") == {"expected_tv_bound", "expected_tv_exact"}
    assert theory(metric="hellinger", squared=True) == {"expected_hellinger_sq_bound"}
    assert theory(metric="hellinger") == set()
    assert theory(metric="l2", squared=True) == {"expected_l2_sq_exact"}
    assert theory(metric="kl") == set()
    assert theory(metric="tv", estimator=EstimatorKind("add-constant", 1.0)) == set()

def test_infinite_values():
    config = ExperimentSettings(mode="expectation", dist=(0.5, 0.5), metric="kl", n=1, trials=20).resolve()
    report = run_expectation(config)
    assert report.infinite_count == 20
    assert report.mean == math.inf
    assert json.loads(dump_json(report_to_json(report)))["mean"] == "inf"

def test_failure_rate_passes():
    config = ExperimentSettings(mode="failure-rate", dist=uniform(2), metric="tv", eps=0.1, delta=0.05, auto_n=True,
                                trials=2000, base_seed=42).resolve()
    assert config.n == 738
    report = run_failure_rate(config)
    assert report.passed
    assert report.failure_rate_upper is not None and report.failure_rate_upper <= 0.05
    assert report.failure_ci95 is not None

def test_failure_rate_fails_with_too_few_samples():
    config = ExperimentSettings(mode="failure-rate", dist=uniform(10), metric="tv", n=10, eps=0.1, delta=0.05, trials=200).resolve()
    report = run_failure_rate(config)
    assert not report.passed
    assert report.failure_rate is not None and report.failure_rate > 0.9

def test_failure_rate_against_tail():
    config = ExperimentSettings(mode="failure-rate", dist=uniform(2), metric="tv", n=100, eps=0.2, delta=0.05, against="tail",
                                trials=1000).resolve()
    report = run_failure_rate(config)
    assert report.theory["tail"] == pytest.approx(2.0 * math.exp(-2.0))
    assert report.verdict == {"failure_rate_upper <= tail": True}

    unasserted = ExperimentSettings(mode="failure-rate", dist=uniform(2), metric="tv", n=10, eps=0.1, delta=0.05, against="tail",
                                    trials=10).resolve()
    with pytest.raises(InvalidConfig, match=r"No tail bound"):
        run_failure_rate(unasserted)

def test_tail_curve_kolmogorov():
    config = ExperimentSettings(mode="tail-curve", dist=uniform(20), metric="kolmogorov", n=50, thresholds=(0.05, 0.1, 0.15),
                                trials=1000, base_seed=1).resolve()
    points = run_tail_curve(config)
    assert [p.threshold for p in points] == [0.05, 0.1, 0.15]
    assert all(p.theoretical_tail is not None and p.holds for p in points)
    tails = [p.empirical_tail for p in points]
    assert tails == sorted(tails, reverse=True)

    report = tail_curve_report(config, points)
    assert report.passed
    assert len(report.verdict) == 3

def test_tail_curve_relative_entropy():
    config = ExperimentSettings(mode="tail-curve", dist=uniform(2), metric="kl", direction="reverse", n=50, thresholds=(0.08,),
                                trials=2000, base_seed=2).resolve()
    points = run_tail_curve(config)
    assert points[0].theoretical_tail == pytest.approx(4.0 * math.exp(-3.0))
    assert points[0].holds

def test_lattice_ties_are_not_exceedances():
    # With a single sample from the uniform distribution on 10 symbols every trial lands exactly on
    # tv = 0.9 and KL(p̂‖p) = ln 10, whatever the rounding of the sums
    tv = ExperimentSettings(mode="tail-curve", dist=uniform(10), metric="tv", n=1, thresholds=(0.9,), trials=20).resolve()
    assert run_tail_curve(tv)[0].exceedances == 0
    kl = ExperimentSettings(mode="tail-curve", dist=uniform(10), metric="kl", direction="reverse", n=1, thresholds=(math.log(10.0),),
                            trials=20).resolve()
    assert run_tail_curve(kl)[0].exceedances == 20

    config = ExperimentSettings(mode="failure-rate", dist=uniform(10), metric="tv", n=1, eps=0.9, delta=0.05, trials=100).resolve()
    report = run_failure_rate(config)
    assert report.failure_rate == 0.0
    assert report.passed

def test_tail_curve_json_rows():
    config = ExperimentSettings(mode="tail-curve", dist=uniform(20), metric="kolmogorov", n=50, thresholds=(0.05, 0.2),
                                trials=200, base_seed=4).resolve()
    points = run_tail_curve(config)
    rows = tail_curve_to_json(points)
    assert [set(row) for row in rows] == [{"threshold", "empirical_tail", "empirical_tail_lower", "theoretical_tail", "asserted", "holds"}] * 2
    assert all(row["empirical_tail_lower"] <= row["empirical_tail"] for row in rows)
    assert [p.exceedances / 200 for p in points] == [row["empirical_tail"] for row in rows]

def test_tail_curve_without_asserted_bound():
    config = ExperimentSettings(mode="tail-curve", dist=uniform(2), metric="chi2", n=20, thresholds=(0.1,), trials=50).resolve()
    points = run_tail_curve(config)
    assert points[0].theoretical_tail is None
    assert tail_curve_report(config, points).verdict == {}
    assert tail_curve_to_json(points)[0]["asserted"] is False

def test_tail_curve_csv():
    config = ExperimentSettings(mode="tail-curve", dist=uniform(20), metric="kolmogorov", n=50, thresholds=(0.1, 0.2),
                                trials=100).resolve()
    lines = tail_curve_to_csv(run_tail_curve(config)).splitlines()
    assert lines[0] == "threshold,empirical_tail,theoretical_tail,holds"
    assert len(lines) == 3
    assert lines[1].startswith("0.1,")

def test_kl_unbounded_demo():
    demo = run_kl_unbounded_demo(2, 10, 0.1, 2000, 11)
    assert demo.analytic == pytest.approx(0.9**10 + 0.1**10)
    assert abs(demo.infinite_fraction - demo.analytic) <= 5.0 * demo.std_err
    assert set(kl_unbounded_to_json(demo)) == {"trials", "infinite_fraction", "analytic", "std_err", "matches"}

    smoothed = run_kl_unbounded_demo(2, 10, 0.1, 500, 11, estimator=EstimatorKind("add-constant", 1.0))
    assert smoothed.infinite_fraction == 0.0
    assert smoothed.matches

def test_kl_unbounded_half_mass():
    demo = run_kl_unbounded_demo(2, 1, 0.5, 100, 0)
    assert demo.analytic == 1.0
    assert demo.infinite_fraction == 1.0
    assert demo.matches
