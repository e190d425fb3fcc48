"""
Provides seeded Monte Carlo experiments that compare the behavior of estimators
with the expectation bounds, failure probabilities and tail curves of `distlearn.bounds`.

Trial `i` draws its samples with seed `derive_seed(base_seed, i)` and results are
aggregated in trial order, so reports are identical for any number of threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from scipy.stats import beta, norm

import distlearn
from distlearn import logger
from distlearn.bounds import expected_hellinger_sq_bound, expected_l2_sq_exact, expected_tv_bound, expected_tv_exact, tail_bound
from distlearn.core import Distribution, derive_seed, sample
from distlearn.estimators import EstimatorKind, estimate
from distlearn.metrics import distance
from distlearn.settings import ExperimentConfig, ExperimentSettings
from distlearn.utils import InvalidConfig

CONFIDENCE = 0.95
"""Confidence level of all reported intervals."""

EXACT_MATCH_SE = 4.0
"""A Monte Carlo mean matches an exact expectation if it is within this many standard errors."""

EXACT_TV_LIMIT = 10**7
"""The exact expected total variation is only enumerated if k·n stays below this."""

CHUNKS_PER_THREAD = 4
"""Trials are split into this many chunks per worker thread."""

TIE_TOLERANCE = 1e-12
"""Metric values within this distance of a threshold count as ties, so lattice rounding does not decide an exceedance."""

@dataclass
class ExperimentReport:
    """The statistical outcome of an experiment."""
    mode: str
    """The experiment mode."""
    config: dict[str, Any]
    """The configuration that produced this report (without the thread count)."""
    trials: int
    """The number of trials."""
    mean: Optional[float] = None
    """The mean of the finite metric values."""
    std_err: Optional[float] = None
    """The standard error of the mean."""
    ci95: Optional[tuple[float, float]] = None
    """Normal approximation 95% interval for the mean."""
    failure_rate: Optional[float] = None
    """The fraction of trials with metric > eps."""
    failure_rate_upper: Optional[float] = None
    """One-sided 95% Clopper-Pearson upper bound on the failure probability."""
    failure_ci95: Optional[tuple[float, float]] = None
    """Two-sided 95% Wilson interval for the failure probability."""
    theory: dict[str, Optional[float]] = field(default_factory=dict)
    """The theoretical values the experiment is compared with."""
    verdict: dict[str, bool] = field(default_factory=dict)
    """Pass or fail per comparison."""
    infinite_count: int = 0
    """The number of trials where the metric was infinite."""
    generator: str = "PCG64"
    """The bit generator used to draw samples."""

    @property
    def passed(self) -> bool:
        """Whether every comparison passed."""
        return all(self.verdict.values())

@dataclass(frozen=True)
class TailPoint:
    """One point of a tail curve."""
    threshold: float
    """The threshold t."""
    exceedances: int
    """The number of trials where the metric exceeded t."""
    trials: int
    """The number of trials."""
    theoretical_tail: Optional[float]
    """The asserted bound on the exceedance probability, or None where no bound is asserted."""

    @property
    def empirical_tail(self) -> float:
        """The fraction of trials where the metric exceeded t."""
        return self.exceedances / self.trials

    @property
    def empirical_lower(self) -> float:
        """One-sided 95% Clopper-Pearson lower limit of the exceedance probability."""
        return clopper_pearson_lower(self.exceedances, self.trials)

    @property
    def holds(self) -> bool:
        """
        Whether the data is consistent with the asserted bound, i.e. the lower confidence
        limit of the exceedance probability does not exceed it. Bounds far below 1/trials
        can not be refuted by the raw fraction alone.
        """
        return self.theoretical_tail is None or self.empirical_lower <= self.theoretical_tail

@dataclass(frozen=True)
class KlUnboundedReport:
    """The outcome of the demonstration that KL(p‖p̂) is infinite with positive probability."""
    trials: int
    """The number of trials."""
    infinite_fraction: float
    """The fraction of trials with KL(p‖p̂) = inf."""
    analytic: float
    """The probability that some symbol of the support is never drawn."""
    std_err: float
    """The standard error of the fraction under the analytic probability."""
    matches: bool
    """Whether the fraction is within 3 standard errors of the analytic value."""

def clopper_pearson_upper(x: int, n: int, confidence: float = CONFIDENCE) -> float:
    """
    Returns the exact one-sided upper confidence limit for a binomial proportion
    with x successes out of n trials.
    """
    if n < 1 or not 0 <= x <= n:
        raise ValueError(f"Invalid binomial observation {x}/{n}")
    if x == n:
        return 1.0
    return float(beta.ppf(confidence, x + 1, n - x))

def clopper_pearson_lower(x: int, n: int, confidence: float = CONFIDENCE) -> float:
    """
    Returns the exact one-sided lower confidence limit for a binomial proportion
    with x successes out of n trials.
    """
    if n < 1 or not 0 <= x <= n:
        raise ValueError(f"Invalid binomial observation {x}/{n}")
    if x == 0:
        return 0.0
    return float(beta.ppf(1.0 - confidence, x, n - x + 1))

def wilson_interval(x: int, n: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    """Returns the two-sided Wilson score interval for x successes out of n trials."""
    if n < 1 or not 0 <= x <= n:
        raise ValueError(f"Invalid binomial observation {x}/{n}")
    z = float(norm.ppf(1.0 - (1.0 - confidence) / 2.0))
    phat = x / n
    center = (phat + z * z / (2 * n)) / (1 + z * z / n)
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    return max(0.0, center - half), min(1.0, center + half)

def _trial_values(config: ExperimentConfig, dist: Distribution, start: int, stop: int) -> np.ndarray:
    values = np.empty(stop - start)
    for i in range(start, stop):
        s = sample(dist, config.n, derive_seed(config.base_seed, i))
        p_hat = estimate(config.estimator, s, dist.k)
        if config.direction == "forward":
            value = distance(config.metric, dist, p_hat)
        else:
            value = distance(config.metric, p_hat, dist)
        values[i - start] = value * value if config.squared else value
    return values

def run_trials(config: ExperimentConfig) -> np.ndarray:
    """
    Runs all trials of the experiment and returns the metric value of each trial,
    in trial order. Values may be infinite for KL and chi2.
    """
    dist = config.distribution()
    threads = max(1, min(config.threads, config.trials))
    n_chunks = min(config.trials, threads * CHUNKS_PER_THREAD)
    bounds = np.linspace(0, config.trials, n_chunks + 1).astype(int).tolist()
    chunks = list(zip(bounds[:-1], bounds[1:]))
    logger.debug(f"running {config.trials} trials in {len(chunks)} chunks on {threads} threads")

    if threads == 1:
        parts = [_trial_values(config, dist, a, b) for a, b in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _trial_values(config, dist, c[0], c[1]), chunks))
    return np.concatenate(parts)

def _exceeds(metric: str, values: np.ndarray, t: float) -> np.ndarray:
    # The relative entropy tail (and the Hellinger tail derived from it) bounds P[d >= t]
    if metric in ("kl", "hellinger"):
        return values >= t - TIE_TOLERANCE
    return values > t + TIE_TOLERANCE

def _base_report(config: ExperimentConfig, values: np.ndarray) -> ExperimentReport:
    finite = values[np.isfinite(values)]
    config_json = config.to_json()
    config_json.pop("threads", None)
    report = ExperimentReport(mode=config.mode, config=config_json, trials=config.trials,
                              infinite_count=int(values.shape[0] - finite.shape[0]),
                              generator=distlearn.generator_name)
    if finite.shape[0] == 0:
        report.mean = math.inf
        report.std_err = math.inf
        report.ci95 = (math.inf, math.inf)
        return report

    mean = math.fsum(finite.tolist()) / finite.shape[0]
    std_err = float(np.std(finite, ddof=1)) / math.sqrt(finite.shape[0]) if finite.shape[0] > 1 else 0.0
    z = float(norm.ppf(1.0 - (1.0 - CONFIDENCE) / 2.0))
    report.mean = mean
    report.std_err = std_err
    report.ci95 = (mean - z * std_err, mean + z * std_err)
    return report

def expectation_theory(config: ExperimentConfig, dist: Distribution) -> dict[str, float]:
    """
    Returns the theoretical values that apply to the mean of the configured metric:
    upper bounds (keys ending in `_bound`) and exact expectations (keys ending in `_exact`).
    Theory only exists for the empirical estimator.
    """
    if config.estimator.name != "empirical":
        return {}
    k, n = dist.k, config.n
    if config.metric == "tv" and not config.squared:
        theory = {"expected_tv_bound": expected_tv_bound(k, n)}
        if k * n <= EXACT_TV_LIMIT:
            theory["expected_tv_exact"] = expected_tv_exact(dist, n)
        return theory
    if config.metric == "hellinger" and config.squared:
        return {"expected_hellinger_sq_bound": expected_hellinger_sq_bound(k, n)}
    if config.metric == "l2" and config.squared:
        return {"expected_l2_sq_exact": expected_l2_sq_exact(dist, n)}
    return {}

def run_expectation(config: ExperimentConfig) -> ExperimentReport:
    """
    Measures the mean of the metric between the true distribution and its estimate,
    and compares it to the matching expectation bound or exact expectation.

    Parameters
    ----------
    config
        The experiment configuration.

    Returns
    -------
    ExperimentReport
        The report. A bound passes if the measured mean does not exceed it, an exact
        expectation passes if the mean is within `EXACT_MATCH_SE` standard errors.
    """
    logger.experiment_start("expectation", config)
    dist = config.distribution()
    values = run_trials(config)
    report = _base_report(config, values)
    theory = expectation_theory(config, dist)
    report.theory = dict(theory)
    assert report.mean is not None and report.std_err is not None
    for name, value in theory.items():
        if name.endswith("_bound"):
            report.verdict[f"mean <= {name}"] = report.mean <= value
        else:
            report.verdict[f"mean ~ {name}"] = abs(report.mean - value) <= EXACT_MATCH_SE * report.std_err
    logger.experiment_done(report)
    return report

def _tail_theory(config: ExperimentConfig, k: int, t: float) -> Optional[float]:
    if config.estimator.name != "empirical" or config.squared:
        return None
    if config.metric == "kl" and config.direction != "reverse":
        return None
    return tail_bound(config.metric, config.n, k, t)

def run_failure_rate(config: ExperimentConfig) -> ExperimentReport:
    """
    Measures how often the metric exceeds eps. The verdict passes if the one-sided
    Clopper-Pearson upper bound on the failure probability is at most delta (or at most
    the asserted tail bound, if configured with `against="tail"`).

    Raises
    ------
    InvalidConfig
        eps or delta is missing, or a tail comparison was requested where no tail bound is asserted.
    """
    if config.eps is None or config.delta is None:
        raise InvalidConfig("A failure rate experiment needs eps and delta")
    logger.experiment_start("failure-rate", config)
    dist = config.distribution()
    values = run_trials(config)
    report = _base_report(config, values)

    failures = int(np.count_nonzero(values > config.eps + TIE_TOLERANCE))
    report.failure_rate = failures / config.trials
    report.failure_rate_upper = clopper_pearson_upper(failures, config.trials)
    report.failure_ci95 = wilson_interval(failures, config.trials)

    tail = _tail_theory(config, dist.k, config.eps)
    report.theory = {"delta": config.delta, "tail": tail}
    if config.against == "tail":
        if tail is None:
            raise InvalidConfig(f"No tail bound is asserted for {config.metric} at n={config.n}, eps={config.eps}")
        report.verdict["failure_rate_upper <= tail"] = report.failure_rate_upper <= tail
    else:
        report.verdict["failure_rate_upper <= delta"] = report.failure_rate_upper <= config.delta
    logger.experiment_done(report)
    return report

def run_tail_curve(config: ExperimentConfig) -> list[TailPoint]:
    """
    Measures the empirical exceedance probability of the metric for every configured
    threshold, next to the asserted bound (DKW for Kolmogorov, the relative entropy tail
    for KL(p̂‖p), the bounded-differences tail for total variation, ...).

    Raises
    ------
    InvalidConfig
        No thresholds are configured.
    """
    if not config.thresholds:
        raise InvalidConfig("A tail curve needs at least one threshold")
    logger.experiment_start("tail-curve", config)
    dist = config.distribution()
    values = run_trials(config)
    points = []
    for t in config.thresholds:
        exceedances = int(np.count_nonzero(_exceeds(config.metric, values, t)))
        points.append(TailPoint(t, exceedances, config.trials, _tail_theory(config, dist.k, t)))
    with logger.indent():
        for p in points:
            bound = "not asserted" if p.theoretical_tail is None else f"<= {p.theoretical_tail:.6g}"
            logger.print_indented(f"{logger.verdict_str(p.holds)} t={p.threshold:.6g} tail={p.empirical_tail:.6g} {bound}")
    return points

def tail_curve_report(config: ExperimentConfig, points: list[TailPoint]) -> ExperimentReport:
    """Summarizes a tail curve as a report with one verdict per asserted threshold."""
    config_json = config.to_json()
    config_json.pop("threads", None)
    report = ExperimentReport(mode="tail-curve", config=config_json, trials=config.trials, generator=distlearn.generator_name)
    for p in points:
        report.theory[f"tail@{p.threshold!r}"] = p.theoretical_tail
        if p.theoretical_tail is not None:
            report.verdict[f"empirical tail@{p.threshold!r} <= bound"] = p.holds
    return report

def run_kl_unbounded_demo(k: int, n: int, tiny_mass: float, trials: int, seed: int,
                          estimator: Optional[EstimatorKind] = None, threads: int = 1) -> KlUnboundedReport:
    """
    Demonstrates that KL(p‖p̂) is infinite whenever the estimate misses part of the support,
    for p putting 1 - tiny_mass on symbol 1 and tiny_mass on symbol 2.

    The analytic probability of an infinite divergence for the empirical estimator is the
    probability that symbol 1 or symbol 2 is never drawn, (1 - tiny_mass)^n + tiny_mass^n.
    Full-support estimators (add-constant) never produce an infinite divergence.

    Parameters
    ----------
    k
        The domain size, at least 2. Symbols 3..k have no mass.
    n
        The number of samples per trial.
    tiny_mass
        The mass of symbol 2, in (0, 1).
    trials
        The number of trials.
    seed
        The base seed.
    estimator
        The estimator, empirical by default.
    threads
        The number of worker threads.
    """
    config = ExperimentSettings(mode="kl-unbounded", dist=tuple([0.0] * k), estimator=estimator, n=n,
                                trials=trials, base_seed=seed, threads=threads, tiny_mass=tiny_mass).resolve()
    return kl_unbounded(config)

def kl_unbounded(config: ExperimentConfig) -> KlUnboundedReport:
    """Runs a resolved kl-unbounded configuration, see `run_kl_unbounded_demo`."""
    if config.tiny_mass is None:
        raise InvalidConfig("The kl-unbounded demo needs tiny_mass")
    logger.experiment_start("kl-unbounded", config)
    values = run_trials(config)
    infinite = int(np.count_nonzero(np.isinf(values)))
    fraction = infinite / config.trials

    if config.estimator.name == "empirical":
        analytic = (1.0 - config.tiny_mass) ** config.n + config.tiny_mass ** config.n
    else:
        analytic = 0.0
    std_err = math.sqrt(analytic * (1.0 - analytic) / config.trials)
    matches = abs(fraction - analytic) <= 3.0 * std_err
    with logger.indent():
        logger.print_indented(f"{logger.verdict_str(matches)} infinite fraction {fraction:.6g} {logger.col('[90m')}(analytic {analytic:.6g}){logger.col('[m')}")
    return KlUnboundedReport(config.trials, fraction, analytic, std_err, matches)

def report_to_json(report: ExperimentReport) -> dict[str, Any]:
    """Encodes a report as json."""
    return {
        "mode": report.mode,
        "config": report.config,
        "generator": report.generator,
        "trials": report.trials,
        "mean": report.mean,
        "std_err": report.std_err,
        "ci95": None if report.ci95 is None else list(report.ci95),
        "failure_rate": report.failure_rate,
        "failure_rate_upper": report.failure_rate_upper,
        "failure_ci95": None if report.failure_ci95 is None else list(report.failure_ci95),
        "infinite_count": report.infinite_count,
        "theory": report.theory,
        "verdict": report.verdict,
        "passed": report.passed,
    }

def tail_curve_to_json(points: list[TailPoint]) -> list[dict[str, Any]]:
    """Encodes a tail curve as a list of rows."""
    return [{"threshold": p.threshold, "empirical_tail": p.empirical_tail, "empirical_tail_lower": p.empirical_lower,
             "theoretical_tail": p.theoretical_tail, "asserted": p.theoretical_tail is not None,
             "holds": p.holds} for p in points]

def tail_curve_to_csv(points: list[TailPoint]) -> str:
    """Encodes a tail curve as csv, one row per threshold. Bounds that are not asserted are left empty."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["threshold", "empirical_tail", "theoretical_tail", "holds"])
    for p in points:
        writer.writerow([repr(p.threshold), repr(p.empirical_tail),
                         "" if p.theoretical_tail is None else repr(p.theoretical_tail),
                         "true" if p.holds else "false"])
    return out.getvalue()

def kl_unbounded_to_json(report: KlUnboundedReport) -> dict[str, Any]:
    """Encodes a kl-unbounded report as json."""
    return {"trials": report.trials, "infinite_fraction": report.infinite_fraction, "analytic": report.analytic,
            "std_err": report.std_err, "matches": report.matches}
