"""
Provides the acceptance grid run by `distlearn verify-all`. Each criterion runs one
or more seeded experiments or exact checks and yields a single pass/fail row.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, Literal

import numpy as np
from scipy.stats import binom

from distlearn import logger
from distlearn.bounds import (binomial_inverse_moment, expected_tv_bound, expected_tv_exact, sample_size_hellinger,
                              sample_size_kolmogorov, sample_size_l2, sample_size_linf, sample_size_tv, tail_agrawal)
from distlearn.core import Distribution, FamilySpec, derive_seed, from_family
from distlearn.estimators import EstimatorKind
from distlearn.harness import (report_to_json, run_expectation, run_failure_rate, run_kl_unbounded_demo, run_tail_curve,
                               tail_curve_to_json)
from distlearn.metrics import inequality_report, subset_sup_oracle, total_variation
from distlearn.settings import ExperimentSettings
from distlearn.utils import dump_json, format_human

Scale = Literal["smoke", "full"]
"""The trial budget of an acceptance run."""

@dataclass(frozen=True)
class CriterionResult:
    """The outcome of one acceptance criterion."""
    name: str
    """A short name of the criterion."""
    passed: bool
    """Whether the criterion holds."""
    detail: str
    """A human readable summary of the measured values."""

@dataclass(frozen=True)
class Budget:
    """Trial counts for one scale."""
    trials: int
    """Trials for experiments that call for 10^4 trials at full scale."""
    tail_trials: int
    """Trials for experiments that call for 10^5 trials at full scale."""
    pairs: int
    """Random distribution pairs per domain size for the inequality chains."""

BUDGETS: dict[str, Budget] = {
    "smoke": Budget(trials=1_000, tail_trials=5_000, pairs=1_000),
    "full": Budget(trials=10_000, tail_trials=100_000, pairs=10_000),
}

def _settings(seed: int, threads: int, **kwargs: Any) -> ExperimentSettings:
    return ExperimentSettings(base_seed=seed, threads=threads, **kwargs)

def _uniform(k: int) -> FamilySpec:
    return FamilySpec("uniform", k)

def tv_expectation(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """Mean total variation of the empirical estimator stays below ½√(k/n), and matches the exact value for k=2."""
    passed = True
    details = []
    for k in (2, 10, 100):
        n = 100 * k
        report = run_expectation(_settings(seed, threads, mode="expectation", dist=_uniform(k), metric="tv",
                                           n=n, trials=budget.trials).resolve())
        assert report.mean is not None
        passed &= report.mean <= expected_tv_bound(k, n)
        details.append(f"k={k}: {format_human(report.mean)}")

    report = run_expectation(_settings(seed, threads, mode="expectation", dist=_uniform(2), metric="tv",
                                       n=100, trials=budget.trials).resolve())
    assert report.mean is not None and report.std_err is not None
    exact = expected_tv_exact(from_family(_uniform(2)), 100)
    passed &= abs(report.mean - exact) <= 3.0 * report.std_err
    details.append(f"k=2,n=100: {format_human(report.mean)} vs exact {format_human(exact)}")
    return CriterionResult("TV expectation bound", passed, "; ".join(details))

def tv_failure_rate(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """Failure rate at the total variation sample size stays below delta."""
    worst = 0.0
    passed = True
    for k, eps in itertools.product((2, 10, 100), (0.1, 0.2)):
        n = sample_size_tv(k, eps, 0.05).n
        report = run_failure_rate(_settings(seed, threads, mode="failure-rate", dist=_uniform(k), metric="tv", n=n,
                                            eps=eps, delta=0.05, trials=budget.trials).resolve())
        passed &= report.passed
        worst = max(worst, report.failure_rate_upper or 0.0)
    return CriterionResult("TV failure rate", passed, f"max upper bound {format_human(worst)} <= 0.05")

def hellinger_expectation(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """Mean squared Hellinger distance stays below k/(2n) for uniform and zipf distributions."""
    passed = True
    details = []
    specs = [FamilySpec("uniform", k) for k in (10, 100)] + [FamilySpec("zipf", k, {"exponent": 1.0}) for k in (10, 100)]
    for spec in specs:
        k = spec.k
        report = run_expectation(_settings(seed, threads, mode="expectation", dist=spec, metric="hellinger", squared=True,
                                           n=100 * k, trials=budget.trials).resolve())
        passed &= report.passed
        assert report.mean is not None
        bound = k / (2.0 * 100 * k)
        details.append(f"{spec.family} k={k}: margin {format_human(bound - report.mean)}")
    return CriterionResult("Hellinger expectation bound", passed, "; ".join(details))

def hellinger_optimal(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """Failure rate at the optimal Hellinger sample size stays below delta."""
    passed = True
    details = []
    for k in (10, 100):
        n = sample_size_hellinger(k, 0.2, 0.05, "optimal").n
        report = run_failure_rate(_settings(seed, threads, mode="failure-rate", dist=_uniform(k), metric="hellinger", n=n,
                                            eps=0.2, delta=0.05, trials=budget.trials).resolve())
        passed &= report.passed
        details.append(f"k={k}, n={n}: upper {format_human(report.failure_rate_upper or 0.0)}")
    return CriterionResult("Hellinger optimal sample size", passed, "; ".join(details))

def dkw(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """Empirical Kolmogorov exceedance stays below 2e^{-2nt²}."""
    passed = True
    for n in (50, 265):
        points = run_tail_curve(_settings(seed, threads, mode="tail-curve", dist=_uniform(20), metric="kolmogorov", n=n,
                                          thresholds=(0.05, 0.1, 0.15, 0.2), trials=budget.tail_trials).resolve())
        passed &= all(p.holds for p in points)
    return CriterionResult("DKW inequality", passed, "k=20, n in {50, 265}, 4 thresholds")

def agrawal(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """Empirical P[KL(p̂‖p) >= α] stays below the relative entropy tail at n = 4(k-1)/α."""
    passed = True
    details = []
    for k, n in itertools.product((2, 5), (50, 100)):
        alpha = 4.0 * (k - 1) / n
        points = run_tail_curve(_settings(seed, threads, mode="tail-curve", dist=_uniform(k), metric="kl", direction="reverse",
                                          n=n, thresholds=(alpha,), trials=budget.tail_trials).resolve())
        passed &= all(p.holds and p.theoretical_tail is not None for p in points)
        details.append(f"k={k},n={n}: {format_human(points[0].empirical_tail)} <= {format_human(tail_agrawal(n, k, alpha))}")
    return CriterionResult("Relative entropy tail", passed, "; ".join(details))

def inverse_moment(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """The closed form of E[1/(N+1)] matches enumeration for r <= 20."""
    _ = (seed, budget, threads)
    worst = 0.0
    for r in range(21):
        j = np.arange(r + 1)
        for rho in np.linspace(0.1, 1.0, 10).tolist():
            oracle = math.fsum((binom.pmf(j, r, rho) / (j + 1)).tolist())
            worst = max(worst, abs(binomial_inverse_moment(r, rho) - oracle))
    return CriterionResult("Binomial inverse moment", worst <= 1e-10, f"max error {worst:.3g}")

def _random_pair(seed: int, index: int, k: int) -> tuple[Distribution, Distribution]:
    p = from_family(FamilySpec("dirichlet", k, {"concentration": 1.0}, derive_seed(seed, 2 * index)))
    q = from_family(FamilySpec("dirichlet", k, {"concentration": 1.0}, derive_seed(seed, 2 * index + 1)))
    return p, q

def inequality_chains(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """All inequality chains hold on random dirichlet pairs."""
    _ = threads
    failures = 0
    for k in (2, 10, 100):
        for i in range(budget.pairs):
            p, q = _random_pair(seed + k, i, k)
            failures += sum(not c.holds for c in inequality_report(p, q))
    return CriterionResult("Metric inequality chains", failures == 0, f"{failures} violations over {3 * budget.pairs} pairs")

def tv_subset_oracle(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """Total variation equals the supremum over all subsets."""
    _ = (budget, threads)
    worst = 0.0
    for i in range(100):
        k = 2 + i % 11
        p, q = _random_pair(seed + 1_000_003, i, k)
        worst = max(worst, abs(total_variation(p, q) - subset_sup_oracle(p, q)))
    return CriterionResult("TV subset oracle", worst <= 1e-10, f"max error {worst:.3g}")

def kl_unbounded(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """KL(p‖p̂) is infinite as often as predicted, and never for the add-constant estimator."""
    demo = run_kl_unbounded_demo(2, 100, 1e-4, budget.trials, seed, threads=threads)
    smoothed = run_kl_unbounded_demo(2, 100, 1e-4, budget.trials, seed, estimator=EstimatorKind("add-constant", 1.0), threads=threads)
    passed = demo.matches and smoothed.infinite_fraction == 0.0
    return CriterionResult("KL(p||p_hat) unboundedness", passed,
                           f"{format_human(demo.infinite_fraction)} vs {format_human(demo.analytic)}; add-constant {format_human(smoothed.infinite_fraction)}")

def k_independence(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """
    Kolmogorov, ℓ∞ and ℓ2 sample sizes do not depend on k, and suffice for k = 10 and k = 1000.
    At these sample sizes the Kolmogorov failure probability approaches delta as k grows, so a
    run only fails if the Wilson interval lies entirely above delta.
    """
    passed = True
    worst = 0.0
    for calculator in (sample_size_kolmogorov, sample_size_linf, sample_size_l2):
        small, large = calculator(0.1, 0.05, 10), calculator(0.1, 0.05, 100_000)
        passed &= dataclasses.replace(small, k=large.k) == large
        for k in (10, 1000):
            report = run_failure_rate(_settings(seed, threads, mode="failure-rate", dist=_uniform(k), metric=small.metric, n=small.n,
                                                eps=0.1, delta=0.05, trials=budget.trials).resolve())
            assert report.failure_ci95 is not None
            passed &= report.failure_ci95[0] <= 0.05
            worst = max(worst, report.failure_rate or 0.0)
    return CriterionResult("k-independence of kolmogorov/linf/l2", passed,
                           f"eps=0.1, delta=0.05, k in {{10, 1000}}: max failure rate {format_human(worst)}")

def determinism(seed: int, budget: Budget, threads: int) -> CriterionResult:
    """Reports are byte-identical for 1 and 4 threads."""
    _ = threads
    outputs = []
    for t in (1, 4):
        settings = _settings(seed, t, mode="failure-rate", dist=FamilySpec("zipf", 10, {"exponent": 1.0}), metric="tv",
                             eps=0.2, delta=0.05, auto_n=True, trials=budget.trials // 2)
        curve = _settings(seed, t, mode="tail-curve", dist=_uniform(20), metric="kolmogorov", n=50,
                          thresholds=(0.1, 0.2), trials=budget.trials // 2)
        outputs.append(dump_json([report_to_json(run_failure_rate(settings.resolve())),
                                  tail_curve_to_json(run_tail_curve(curve.resolve()))]))
    return CriterionResult("Determinism across thread counts", outputs[0] == outputs[1], "threads in {1, 4}")

CRITERIA: list[Callable[[int, Budget, int], CriterionResult]] = [
    tv_expectation,
    tv_failure_rate,
    hellinger_expectation,
    hellinger_optimal,
    dkw,
    agrawal,
    inverse_moment,
    inequality_chains,
    tv_subset_oracle,
    kl_unbounded,
    k_independence,
    determinism,
]
"""All acceptance criteria in order."""

def run_acceptance(seed: int, scale: Scale = "smoke", threads: int = 1) -> list[CriterionResult]:
    """
    Runs every acceptance criterion.

    Parameters
    ----------
    seed
        The base seed of all experiments.
    scale
        `smoke` runs reduced trial counts, `full` the complete budget.
    threads
        The number of worker threads per experiment. Does not change any result.
    """
    budget = BUDGETS[scale]
    results = []
    for criterion in CRITERIA:
        logger.print_indented(f"{logger.col('[1;34m')}criterion{logger.col('[m')} {criterion.__name__}")
        with logger.indent():
            result = criterion(seed, budget, threads)
            logger.criterion_result(result.name, result.passed, result.detail)
        results.append(result)
    return results
