"""
Provides the estimators that map a sample set to a distribution: the empirical
estimator and the add-constant (Laplace smoothing) family. Both only read the
histogram of a sample set, so their cost is linear in k, not in n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from distlearn.core import Distribution, SampleSet, make_distribution
from distlearn.utils import InvalidParam, OutOfDomain

@dataclass(frozen=True)
class EstimatorKind:
    """Selects an estimator. The constant `c` is only used by the add-constant estimator."""
    name: Literal["empirical", "add-constant"]
    """The estimator name."""
    c: Optional[float] = None
    """The pseudo count added to every symbol (add-constant only)."""

    def __post_init__(self) -> None:
        if self.name == "add-constant":
            if self.c is None or not math.isfinite(self.c) or not self.c > 0:
                raise InvalidParam(f"The add-constant estimator requires a positive constant, got {self.c!r}")
        elif self.name == "empirical":
            if self.c is not None:
                raise InvalidParam("The empirical estimator takes no constant")
        else:
            raise InvalidParam(f"Unknown estimator '{self.name}'")

    @staticmethod
    def parse(text: str) -> EstimatorKind:
        """
        Parses the cli form of an estimator, which is either `empirical` or `add-constant:<c>`.

        Raises
        ------
        InvalidParam
            The string does not name a valid estimator.
        """
        if text == "empirical":
            return EstimatorKind("empirical")
        name, sep, value = text.partition(":")
        if name == "add-constant" and sep:
            try:
                c = float(value)
            except ValueError as e:
                raise InvalidParam(f"Invalid add-constant value '{value}'") from e
            return EstimatorKind("add-constant", c)
        raise InvalidParam(f"Unknown estimator '{text}', expected 'empirical' or 'add-constant:<c>'")

    def __str__(self) -> str:
        if self.name == "add-constant":
            return f"add-constant:{self.c!r}"
        return self.name

EMPIRICAL = EstimatorKind("empirical")
"""The empirical estimator."""

def _counts(s: SampleSet, k: int) -> np.ndarray:
    """Returns the histogram of the samples over [k], raising OutOfDomain if a sample exceeds k."""
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise InvalidParam(f"Domain size must be a positive integer, got {k!r}")
    counts = s.counts
    if counts.shape[0] > k:
        if np.any(counts[k:] > 0):
            largest = int(np.flatnonzero(counts)[-1]) + 1
            raise OutOfDomain(f"Sample {largest} lies outside of the domain [1, {k}]")
        return counts[:k]
    if counts.shape[0] < k:
        return np.concatenate([counts, np.zeros(k - counts.shape[0], dtype=counts.dtype)])
    return counts

def empirical(s: SampleSet, k: int) -> Distribution:
    """
    Returns the empirical distribution p̂(i) = counts[i]/n.

    Raises
    ------
    OutOfDomain
        A sample exceeds k.
    """
    counts = _counts(s, k)
    return make_distribution(counts / s.n)

def add_constant(s: SampleSet, k: int, c: float) -> Distribution:
    """
    Returns the add-constant estimate (counts[i] + c)/(n + c·k), which has full support.

    Raises
    ------
    OutOfDomain
        A sample exceeds k.
    InvalidParam
        c is not positive.
    """
    if not math.isfinite(c) or not c > 0:
        raise InvalidParam(f"The additive constant must be positive, got {c!r}")
    counts = _counts(s, k)
    return make_distribution((counts + c) / (s.n + c * k))

def estimate(kind: EstimatorKind, s: SampleSet, k: int) -> Distribution:
    """Applies the given estimator to the sample set."""
    if kind.name == "add-constant":
        assert kind.c is not None
        return add_constant(s, k, kind.c)
    return empirical(s, k)
