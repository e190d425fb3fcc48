"""
Provides closed-form sample size calculators for learning a distribution with the
empirical estimator, the tail inequalities they are derived from, expectation bounds,
and the inverse-moment identity for binomial variables.

Tail formulas are returned uncapped and may exceed one. Sample sizes are the ceiling
of the real-valued bound, computed with a relative guard of 1e-12 so that rounding
noise just above an exact integer does not add a sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Literal, Optional, get_args

import numpy as np
from scipy.stats import binom

from distlearn.core import Distribution
from distlearn.metrics import METRIC_KINDS
from distlearn.utils import InvalidParam, PreconditionViolated, SearchLimitExceeded, Unsupported

Tier = Literal["easy", "intermediate", "optimal"]
"""The strength of the Hellinger sample size bound."""

CEIL_GUARD_ULPS = 64
"""Bounds within this many units in the last place of an integer are rounded to it before taking ceilings."""

SEARCH_CAP = 2**62
"""The largest sample size the KL inversion searches."""

@dataclass(frozen=True)
class BoundRequest:
    """A request for the number of samples needed to learn to accuracy eps with failure probability delta."""
    metric: str
    """The measure, one of `distlearn.metrics.METRIC_KINDS`."""
    k: int
    """The domain size."""
    eps: float
    """The accuracy, positive."""
    delta: float
    """The failure probability, in (0, 1]."""
    tier: Optional[Tier] = None
    """The Hellinger bound tier. Defaults to optimal for Hellinger and must be None otherwise."""

@dataclass(frozen=True)
class BoundCertificate:
    """The required sample size together with the result it follows from."""
    metric: str
    """The measure the certificate is for."""
    k: int
    """The domain size."""
    eps: float
    """The accuracy."""
    delta: float
    """The failure probability."""
    n: int
    """The required number of samples."""
    theorem: str
    """The name of the governing result."""
    formula_terms: dict[str, float] = field(default_factory=dict)
    """The evaluated sub-terms of the bound."""
    tier: Optional[str] = None
    """The Hellinger tier, if applicable."""
    derived: bool = False
    """Whether the formula was derived here rather than stated by the governing result."""
    notes: tuple[str, ...] = ()
    """Additional remarks, e.g. discrepancies between stated constants."""

def _near_integer(x: float) -> bool:
    return abs(x - round(x)) <= CEIL_GUARD_ULPS * math.ulp(x)

def ceil_bound(x: float) -> int:
    """Returns the ceiling of a real-valued sample size bound, but at least 1."""
    if not math.isfinite(x):
        raise InvalidParam(f"Sample size bound is not finite: {x}")
    return max(1, math.ceil(x) if not _near_integer(x) else round(x))

def _check_k(k: int, minimum: int = 1) -> None:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < minimum:
        raise InvalidParam(f"Domain size must be an integer >= {minimum}, got {k!r}")

def _check_eps(eps: float, name: str = "eps") -> None:
    if not math.isfinite(eps) or not eps > 0:
        raise InvalidParam(f"{name} must be positive and finite, got {eps!r}")

def _check_delta(delta: float) -> None:
    if not 0 < delta <= 1:
        raise InvalidParam(f"delta must be in (0, 1], got {delta!r}")

def _check_n(n: float) -> None:
    if not math.isfinite(n) or not n >= 1:
        raise InvalidParam(f"Number of samples must be at least 1, got {n!r}")

def _check_request(k: int, eps: float, delta: float) -> None:
    _check_k(k)
    _check_eps(eps)
    _check_delta(delta)

def sample_size_tv(k: int, eps: float, delta: float) -> BoundCertificate:
    """
    Sample size for total variation: the expectation bound ½√(k/n) <= ε/2 combined
    with the bounded-differences tail 2e^{-nε²/2} <= δ, i.e.
    n = ⌈max(k/ε², (2/ε²)·ln(2/δ))⌉.
    """
    _check_request(k, eps, delta)
    expectation = k / eps**2
    deviation = 2.0 / eps**2 * math.log(2.0 / delta)
    return BoundCertificate("tv", k, eps, delta, ceil_bound(max(expectation, deviation)), "TV Theorem",
                            {"k/eps^2": expectation, "(2/eps^2)ln(2/delta)": deviation})

def sample_size_tv_union(k: int, eps: float, delta: float) -> BoundCertificate:
    """
    Sample size for total variation from a Hoeffding bound on every subset and a union
    bound over all 2^k subsets: n = ⌈(k·ln 2 + ln(1/δ))/(2ε²)⌉.
    """
    _check_request(k, eps, delta)
    value = (k * math.log(2.0) + math.log(1.0 / delta)) / (2.0 * eps**2)
    return BoundCertificate("tv", k, eps, delta, ceil_bound(value), "TV Theorem (union bound over subsets)",
                            {"(k ln2 + ln(1/delta))/(2 eps^2)": value})

def sample_size_hellinger(k: int, eps: float, delta: float, tier: Tier = "optimal") -> BoundCertificate:
    """
    Sample size for Hellinger distance.

    Parameters
    ----------
    k
        The domain size.
    eps
        The accuracy, in (0, 1].
    delta
        The failure probability.
    tier
        `easy` applies the total variation bound at accuracy ε², using d_H² <= d_TV.
        `intermediate` is ⌈max(k/ε², (8/ε⁴)·ln(1/δ))⌉ from the expected squared distance
        k/(2n) and a tail of e^{-nε⁴/8}. `optimal` is ⌈max(15k/(2eε²), (1/ε²)·ln(1/δ))⌉
        from the relative entropy tail of the empirical distribution.
    """
    _check_request(k, eps, delta)
    if eps > 1:
        raise InvalidParam(f"Hellinger accuracy must be at most 1, got {eps}")

    if tier == "easy":
        tv = sample_size_tv(k, eps**2, delta)
        return BoundCertificate("hellinger", k, eps, delta, tv.n, "Hellinger easy bound (TV Theorem at eps^2)",
                                dict(tv.formula_terms), tier=tier)

    if tier == "intermediate":
        expectation = k / eps**2
        deviation = 8.0 / eps**4 * math.log(1.0 / delta)
        return BoundCertificate("hellinger", k, eps, delta, ceil_bound(max(expectation, deviation)), "Hellinger intermediate bound",
                                {"k/eps^2": expectation, "(8/eps^4)ln(1/delta)": deviation}, tier=tier)

    if tier == "optimal":
        support_term = 15.0 * k / (2.0 * math.e * eps**2)
        deviation = math.log(1.0 / delta) / eps**2
        applicability = (k - 1) / (2.0 * eps**2)
        in_text = 15.0 * k / (2.0 * eps**2)
        n = ceil_bound(max(support_term, deviation, applicability))
        return BoundCertificate("hellinger", k, eps, delta, n, "Hellinger Theorem",
                                {"15k/(2e eps^2)": support_term,
                                 "(1/eps^2)ln(1/delta)": deviation,
                                 "(k-1)/(2 eps^2)": applicability,
                                 "15k/(2 eps^2)": in_text},
                                tier=tier,
                                notes=("n follows the conclusion max(15k/(2e eps^2), ln(1/delta)/eps^2); "
                                       "the stated intermediate threshold 15k/(2 eps^2) is reported for reference only",))

    raise InvalidParam(f"Unknown Hellinger tier '{tier}', expected one of {', '.join(get_args(Tier))}")

def _log_tail_agrawal(n: float, k: int, alpha: float) -> float:
    m = k - 1
    return -n * alpha + m * (1.0 + math.log(alpha * n / m))

def tail_agrawal(n: float, k: int, alpha: float) -> float:
    """
    Evaluates e^{-nα}·(eαn/(k-1))^{k-1}, the bound on P[KL(p̂‖p) >= α] for the empirical
    distribution p̂ of n samples. Strictly decreasing in n where it is asserted.

    Raises
    ------
    PreconditionViolated
        n < (k-1)/α, where the bound is not asserted.
    """
    _check_k(k, 2)
    _check_eps(alpha, "alpha")
    _check_n(n)
    threshold = (k - 1) / alpha
    if n < threshold and not (_near_integer(threshold) and n >= round(threshold)):
        raise PreconditionViolated(f"The relative entropy tail requires n >= (k-1)/alpha = {(k - 1) / alpha}, got n={n}")
    return math.exp(_log_tail_agrawal(n, k, alpha))

def sample_size_kl(k: int, eps: float, delta: float) -> BoundCertificate:
    """
    Sample size for KL(p̂‖p) <= ε: the smallest n >= ⌈(k-1)/ε⌉ with tail_agrawal(n, k, ε) <= δ,
    found by doubling followed by binary search. For k = 1 the divergence is identically
    zero and n = 1.

    Raises
    ------
    SearchLimitExceeded
        No n below 2^62 satisfies the bound.
    """
    _check_request(k, eps, delta)
    if k == 1:
        return BoundCertificate("kl", k, eps, delta, 1, "KL Theorem", {"tail": 0.0},
                                notes=("KL divergence is identically 0 on a single point domain",))

    def ok(n: int) -> bool:
        return tail_agrawal(n, k, eps) <= delta

    lo = ceil_bound((k - 1) / eps)
    hi = lo
    if not ok(lo):
        while not ok(hi):
            lo = hi
            hi *= 2
            if hi > SEARCH_CAP:
                raise SearchLimitExceeded(f"No sample size below 2^62 reaches delta={delta}")
        # Invariant: not ok(lo), ok(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid

    return BoundCertificate("kl", k, eps, delta, hi, "KL Theorem (relative entropy tail inversion)",
                            {"(k-1)/eps": (k - 1) / eps, "tail": tail_agrawal(hi, k, eps)})

def sample_size_kolmogorov(eps: float, delta: float, k: int = 1) -> BoundCertificate:
    """Sample size for Kolmogorov distance by inverting the DKW inequality: n = ⌈ln(2/δ)/(2ε²)⌉, independent of k."""
    _check_request(k, eps, delta)
    value = math.log(2.0 / delta) / (2.0 * eps**2)
    return BoundCertificate("kolmogorov", k, eps, delta, ceil_bound(value), "DKW inequality (Massart constant)",
                            {"ln(2/delta)/(2 eps^2)": value})

def sample_size_linf(eps: float, delta: float, k: int = 1) -> BoundCertificate:
    """Sample size for ℓ∞ distance, using ℓ∞ <= 2·d_K: the Kolmogorov sample size at accuracy ε/2."""
    kolmogorov = sample_size_kolmogorov(eps / 2.0, delta, k)
    return BoundCertificate("linf", k, eps, delta, kolmogorov.n, "linf via DKW inequality at eps/2",
                            dict(kolmogorov.formula_terms))

def sample_size_l2(eps: float, delta: float, k: int = 1) -> BoundCertificate:
    """
    Sample size for ℓ2 distance, independent of k: E[ℓ2] <= √E[ℓ2²] <= 1/√n is at most ε/2 once
    n >= 4/ε², and since moving one sample changes ℓ2 by at most √2/n, bounded differences give
    P[|ℓ2 - E ℓ2| >= ε/2] <= 2e^{-nε²/4}. Hence n = ⌈max(4/ε², (4/ε²)·ln(2/δ))⌉.
    """
    _check_request(k, eps, delta)
    expectation = 4.0 / eps**2
    deviation = 4.0 / eps**2 * math.log(2.0 / delta)
    return BoundCertificate("l2", k, eps, delta, ceil_bound(max(expectation, deviation)), "l2 derived bound",
                            {"4/eps^2": expectation, "(4/eps^2)ln(2/delta)": deviation}, derived=True)

def sample_size(request: BoundRequest) -> BoundCertificate:
    """
    Dispatches a bound request to the matching calculator.

    Raises
    ------
    Unsupported
        The metric is chi2, whose optimal sample complexity is an open problem.
    InvalidParam
        The request is invalid, or a tier was given for a metric other than Hellinger.
    """
    if request.metric not in METRIC_KINDS:
        raise InvalidParam(f"Unknown metric '{request.metric}', expected one of {', '.join(METRIC_KINDS)}")
    if request.tier is not None and request.metric != "hellinger":
        raise InvalidParam("A tier can only be given for the hellinger metric")
    if request.metric == "chi2":
        raise Unsupported("No chi2 sample size is provided: the optimal sample complexity of learning in chi2 distance is an open problem")

    k, eps, delta = request.k, request.eps, request.delta
    if request.metric == "tv":
        return sample_size_tv(k, eps, delta)
    if request.metric == "hellinger":
        return sample_size_hellinger(k, eps, delta, request.tier or "optimal")
    if request.metric == "kl":
        return sample_size_kl(k, eps, delta)
    if request.metric == "kolmogorov":
        return sample_size_kolmogorov(eps, delta, k)
    if request.metric == "linf":
        return sample_size_linf(eps, delta, k)
    return sample_size_l2(eps, delta, k)

def tail_dkw(n: float, eps: float) -> float:
    """Evaluates the DKW bound 2e^{-2nε²} on P[d_K(p̂, p) > ε]."""
    _check_n(n)
    _check_eps(eps)
    return 2.0 * math.exp(-2.0 * n * eps**2)

def tail_hoeffding_subset(n: float, eps: float) -> float:
    """Evaluates the Hoeffding bound e^{-2nε²} on P[p̂(S) > p(S) + ε] for a fixed subset S."""
    _check_n(n)
    _check_eps(eps)
    return math.exp(-2.0 * n * eps**2)

def tail_union_tv(n: float, k: int, eps: float) -> float:
    """Evaluates the union bound 2^k·e^{-2nε²} on P[d_TV(p, p̂) > ε]."""
    _check_k(k)
    _check_n(n)
    _check_eps(eps)
    return math.exp(k * math.log(2.0) - 2.0 * n * eps**2)

def tail_mcdiarmid_tv(n: float, eps: float) -> float:
    """
    Evaluates 2e^{-nε²/2}, the bounded-differences bound on deviating from the expected
    total variation distance by ε/2, where one sample changes the distance by at most 1/n.
    """
    _check_n(n)
    _check_eps(eps)
    return 2.0 * math.exp(-0.5 * n * eps**2)

def tail_hellinger_intermediate(n: float, eps: float) -> float:
    """Evaluates e^{-nε⁴/8}, the bound on deviating from the expected squared Hellinger distance by ε²/2."""
    _check_n(n)
    _check_eps(eps)
    return math.exp(-n * eps**4 / 8.0)

def tail_hellinger_agrawal(n: float, k: int, eps: float) -> float:
    """Evaluates the bound on P[d_H(p̂, p) >= ε] obtained from d_H² <= ½·KL, i.e. tail_agrawal at α = 2ε²."""
    _check_eps(eps)
    return tail_agrawal(n, k, 2.0 * eps**2)

def tail_l2(n: float, eps: float) -> float:
    """Evaluates 2e^{-nε²/4}, the bounded-differences bound on deviating from the expected ℓ2 distance by ε/2."""
    _check_n(n)
    _check_eps(eps)
    return 2.0 * math.exp(-0.25 * n * eps**2)

def tail_bound(metric: str, n: int, k: int, t: float) -> Optional[float]:
    """
    Returns the guaranteed bound on the probability that the empirical estimator of n samples
    is farther than t from the truth, or None where no result asserts one. KL refers to
    KL(p̂‖p) here.

    Parameters
    ----------
    metric
        The measure.
    n
        The number of samples.
    k
        The domain size.
    t
        The threshold.
    """
    _check_eps(t, "threshold")
    if metric == "kolmogorov":
        return tail_dkw(n, t)
    if metric == "linf":
        return tail_dkw(n, t / 2.0)
    if metric == "tv":
        return tail_mcdiarmid_tv(n, t) if n >= k / t**2 else None
    if metric == "l2":
        return tail_l2(n, t) if n >= 4.0 / t**2 else None
    if metric == "hellinger":
        if k < 2 or n < (k - 1) / (2.0 * t**2):
            return None
        return tail_hellinger_agrawal(n, k, t)
    if metric == "kl":
        if k < 2 or n < (k - 1) / t:
            return None
        return tail_agrawal(n, k, t)
    return None

def hellinger_fact_holds(n: float, k: int, eps: float) -> bool:
    """Evaluates (k-1)·ln(2enε²/(k-1)) <= nε², which holds whenever n >= (15/(2e))·k/ε²."""
    _check_k(k, 2)
    _check_eps(eps)
    _check_n(n)
    return (k - 1) * math.log(2.0 * math.e * n * eps**2 / (k - 1)) <= n * eps**2

def expected_tv_bound(k: int, n: int) -> float:
    """Upper bound ½√(k/n) on the expected total variation distance of the empirical estimator."""
    _check_k(k)
    _check_n(n)
    return 0.5 * math.sqrt(k / n)

def expected_hellinger_sq_bound(k: int, n: int) -> float:
    """Upper bound k/(2n) on the expected squared Hellinger distance of the empirical estimator."""
    _check_k(k)
    _check_n(n)
    return k / (2.0 * n)

def expected_l2_sq_exact(p: Distribution, n: int) -> float:
    """Exact expected squared ℓ2 distance of the empirical estimator, Σ p(i)(1 - p(i))/n."""
    _check_n(n)
    return math.fsum((p.pmf * (1.0 - p.pmf)).tolist()) / n

def expected_tv_exact(p: Distribution, n: int) -> float:
    """
    Exact expected total variation distance of the empirical estimator,
    ½·Σ_i E|N_i/n - p(i)| with N_i ~ Bin(n, p(i)), by enumerating every binomial.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParam(f"Number of samples must be a positive integer, got {n!r}")
    j = np.arange(n + 1)
    total = 0.0
    for rho in p.pmf.tolist():
        if 0 < rho < 1:
            total += math.fsum((binom.pmf(j, n, rho) * np.abs(j / n - rho)).tolist())
    return 0.5 * total

def binomial_inverse_moment(r: int, rho: float) -> float:
    """
    Returns E[1/(N+1)] = (1 - (1-ρ)^{r+1})/(ρ(r+1)) for N ~ Bin(r, ρ).

    Raises
    ------
    InvalidParam
        r < 0 or ρ outside of (0, 1].
    """
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or r < 0:
        raise InvalidParam(f"r must be a nonnegative integer, got {r!r}")
    if not 0 < rho <= 1:
        raise InvalidParam(f"rho must be in (0, 1], got {rho!r}")
    if rho == 1:
        return 1.0 / (r + 1)
    return -math.expm1((r + 1) * math.log1p(-rho)) / (rho * (r + 1))

def certificate_to_json(cert: BoundCertificate) -> dict[str, Any]:
    """Encodes a certificate as json."""
    return {
        "metric": cert.metric,
        "tier": cert.tier,
        "k": cert.k,
        "eps": cert.eps,
        "delta": cert.delta,
        "n": cert.n,
        "theorem": cert.theorem,
        "formula_terms": dict(cert.formula_terms),
        "derived": cert.derived,
        "notes": list(cert.notes),
    }
