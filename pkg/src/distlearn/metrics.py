"""
Provides the distance and divergence measures between two distributions over the
same domain, and a report on the inequalities that relate them.

KL and chi-square divergences take values in [0, inf]. Terms where both sides vanish
contribute 0, and a symbol with p(i) > 0 but q(i) = 0 makes the divergence infinite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, Literal, get_args

import numpy as np
from scipy.special import rel_entr

from distlearn.core import Distribution, cdf
from distlearn.utils import DomainMismatch, InvalidParam

MetricKind = Literal["tv", "hellinger", "kl", "chi2", "kolmogorov", "l2", "linf"]
"""The closed set of supported measures."""

METRIC_KINDS: tuple[str, ...] = get_args(MetricKind)

MetricFunction = Callable[[Distribution, Distribution], float]

metrics: dict[str, MetricFunction] = {}
"""All registered measures as a map from (kind -> function)."""

REPORT_TOLERANCE = 1e-10
"""Absolute slack allowed for an inequality to count as satisfied."""

KAHAN_THRESHOLD = 10_000
"""Domain size above which KL terms are summed with compensated summation."""

def metric(kind: str) -> Callable[[MetricFunction], MetricFunction]:
    """
    Function decorator to register a measure under the given kind,
    so that it can be dispatched by `distance`.
    """
    def metric_wrapper(function: MetricFunction) -> MetricFunction:
        metrics[kind] = function
        return function
    return metric_wrapper

def check_same_domain(p: Distribution, q: Distribution) -> None:
    """Asserts that both distributions live on the same domain."""
    if p.k != q.k:
        raise DomainMismatch(f"Domain sizes differ: {p.k} != {q.k}")

def _sum(terms: np.ndarray) -> float:
    """Sums in ascending index order, compensated for large domains."""
    if terms.shape[0] > KAHAN_THRESHOLD:
        return math.fsum(terms.tolist())
    return float(np.sum(terms))

@metric("tv")
def total_variation(p: Distribution, q: Distribution) -> float:
    """Returns the total variation distance ½·Σ|p(i) - q(i)|, which lies in [0, 1]."""
    check_same_domain(p, q)
    return min(1.0, 0.5 * _sum(np.abs(p.pmf - q.pmf)))

def bhattacharyya_coefficient(p: Distribution, q: Distribution) -> float:
    """Returns Σ√(p(i)q(i))."""
    check_same_domain(p, q)
    return _sum(np.sqrt(p.pmf * q.pmf))

@metric("hellinger")
def hellinger(p: Distribution, q: Distribution) -> float:
    """
    Returns the Hellinger distance √(1 - Σ√(p(i)q(i))), clamped to [0, 1].

    Since both inputs sum to one, 1 - Σ√(p(i)q(i)) equals ½·Σ(√p(i) - √q(i))², which is
    what is evaluated: it has no cancellation for nearly identical inputs, so d(p, p) = 0.
    `test_hellinger_matches_bhattacharyya_form` in test/test_metrics.py checks both forms agree.
    """
    check_same_domain(p, q)
    squared = 0.5 * _sum((np.sqrt(p.pmf) - np.sqrt(q.pmf)) ** 2)
    return math.sqrt(min(1.0, max(0.0, squared)))

@metric("kl")
def kl_divergence(p: Distribution, q: Distribution) -> float:
    """Returns the Kullback-Leibler divergence Σ p(i)·ln(p(i)/q(i)) in [0, inf]."""
    check_same_domain(p, q)
    terms = rel_entr(p.pmf, q.pmf)
    if np.any(np.isinf(terms)):
        return math.inf
    return max(0.0, _sum(terms))

@metric("chi2")
def chi_square(p: Distribution, q: Distribution) -> float:
    """Returns the chi-square divergence Σ (p(i) - q(i))²/q(i) in [0, inf]."""
    check_same_domain(p, q)
    zero = q.pmf == 0
    if np.any(p.pmf[zero] > 0):
        return math.inf
    mask = ~zero
    diff = p.pmf[mask] - q.pmf[mask]
    return _sum(diff * diff / q.pmf[mask])

@metric("kolmogorov")
def kolmogorov(p: Distribution, q: Distribution) -> float:
    """Returns the Kolmogorov distance, the largest absolute difference between the two cdfs."""
    check_same_domain(p, q)
    return min(1.0, float(np.max(np.abs(cdf(p) - cdf(q)))))

@metric("l2")
def l2(p: Distribution, q: Distribution) -> float:
    """Returns the euclidean distance between the probability vectors."""
    check_same_domain(p, q)
    diff = p.pmf - q.pmf
    return math.sqrt(_sum(diff * diff))

@metric("linf")
def l_inf(p: Distribution, q: Distribution) -> float:
    """Returns the largest absolute coordinate difference."""
    check_same_domain(p, q)
    return float(np.max(np.abs(p.pmf - q.pmf)))

def l1(p: Distribution, q: Distribution) -> float:
    """Returns Σ|p(i) - q(i)|."""
    check_same_domain(p, q)
    return _sum(np.abs(p.pmf - q.pmf))

def distance(kind: str, p: Distribution, q: Distribution) -> float:
    """
    Evaluates the measure registered under the given kind.

    Raises
    ------
    InvalidParam
        The kind is unknown.
    """
    if kind not in metrics:
        raise InvalidParam(f"Unknown metric '{kind}', expected one of {', '.join(METRIC_KINDS)}")
    return metrics[kind](p, q)

def subset_sup_oracle(p: Distribution, q: Distribution) -> float:
    """
    Computes max over all subsets S of [k] of p(S) - q(S) by enumeration.
    Exponential in k, only meant as a reference for small domains.
    """
    check_same_domain(p, q)
    if p.k > 20:
        raise InvalidParam(f"Subset enumeration is limited to k <= 20, got k={p.k}")
    diff = (p.pmf - q.pmf).tolist()
    best = 0.0
    for mask in itertools.product((False, True), repeat=p.k):
        best = max(best, math.fsum(d for d, chosen in zip(diff, mask) if chosen))
    return best

@dataclass(frozen=True)
class InequalityCheck:
    """The evaluation of a single inequality lhs <= rhs."""
    name: str
    """A short description of the inequality."""
    lhs: float
    """The evaluated left hand side."""
    rhs: float
    """The evaluated right hand side."""
    slack: float
    """rhs - lhs. Infinite if only the right hand side is, zero if both are."""
    holds: bool
    """Whether lhs <= rhs holds within the report tolerance."""

def check_inequality(name: str, lhs: float, rhs: float, tolerance: float = REPORT_TOLERANCE) -> InequalityCheck:
    """Evaluates lhs <= rhs, where an infinite right hand side always passes."""
    if math.isinf(rhs):
        return InequalityCheck(name, lhs, rhs, 0.0 if math.isinf(lhs) else math.inf, True)
    if math.isinf(lhs):
        return InequalityCheck(name, lhs, rhs, -math.inf, False)
    return InequalityCheck(name, lhs, rhs, rhs - lhs, lhs <= rhs + tolerance)

def inequality_report(p: Distribution, q: Distribution, tolerance: float = REPORT_TOLERANCE) -> list[InequalityCheck]:
    """
    Evaluates all inequalities between the measures for the given pair.

    The ℓ2 upper bound is checked in the form ℓ2² <= ℓ∞·ℓ1. The weaker looking ℓ2 <= √ℓ∞
    fails for disjoint point masses, where ℓ2 = √2 and ℓ∞ = 1.

    Parameters
    ----------
    p
        The first distribution.
    q
        The second distribution.
    tolerance
        The absolute slack allowed for each inequality.

    Returns
    -------
    list[InequalityCheck]
        One entry per inequality, in a fixed order.
    """
    check_same_domain(p, q)
    tv = total_variation(p, q)
    h = hellinger(p, q)
    kl = kl_divergence(p, q)
    chi2 = chi_square(p, q)
    dk = kolmogorov(p, q)
    e2 = l2(p, q)
    einf = l_inf(p, q)
    e1 = l1(p, q)

    checks = [
        ("½·tv² <= hellinger²", 0.5 * tv * tv, h * h),
        ("hellinger² <= tv", h * h, tv),
        ("hellinger² <= ½·kl", h * h, 0.5 * kl),
        ("2·tv² <= kl", 2.0 * tv * tv, kl),
        ("kl <= chi2", kl, chi2),
        ("l2 <= 2·tv", e2, 2.0 * tv),
        ("2·tv <= √k·l2", 2.0 * tv, math.sqrt(p.k) * e2),
        ("linf <= l2", einf, e2),
        ("l2² <= linf·l1", e2 * e2, einf * e1),
        ("½·linf <= kolmogorov", 0.5 * einf, dk),
        ("kolmogorov <= tv", dk, tv),
    ]
    return [check_inequality(name, lhs, rhs, tolerance) for name, lhs, rhs in checks]

def report_to_json(report: list[InequalityCheck]) -> list[dict[str, Any]]:
    """Encodes an inequality report as a list of {name, lhs, rhs, slack, holds}."""
    return [{"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "slack": c.slack, "holds": c.holds} for c in report]
