"""
Provides the distribution representation, named distribution families,
seeded sampling and cumulative distribution functions.

Domain elements are the 1-based indices 1..k. Internally, vectors are
indexed from 0, so symbol `i` lives at position `i - 1`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Literal, Mapping, Optional, Sequence, Union, get_args

import numpy as np
import numpy.typing as npt

from distlearn.utils import EmptyDomain, InvalidParam, NegativeMass, NotNormalized, float_from_json

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

Family = Literal["uniform", "point_mass", "two_point", "zipf", "dirichlet"]
"""All supported named distribution families."""

CONSTRUCTION_TOLERANCE = 1e-9
"""Maximum deviation of the total mass from one that is accepted at construction."""

MAX_SEED = 2**64 - 1
"""Seeds are 64-bit unsigned integers."""

def _readonly(arr: npt.NDArray[Any]) -> npt.NDArray[Any]:
    arr.setflags(write=False)
    return arr

@dataclass(frozen=True, eq=False)
class Distribution:
    """A validated probability mass function over the domain [k]. Immutable after construction."""

    pmf: FloatArray
    """The probabilities of the symbols 1..k (stored at positions 0..k-1)."""

    @property
    def k(self) -> int:
        """The domain size."""
        return int(self.pmf.shape[0])

    @cached_property
    def cumulative(self) -> FloatArray:
        """
        The cumulative table used for inverse-cdf sampling. Entries from the last symbol
        with positive mass onwards are exactly 1, so no uniform variate maps past it.
        """
        cum = np.cumsum(self.pmf)
        cum[int(np.flatnonzero(self.pmf > 0.0)[-1]):] = 1.0
        return _readonly(cum)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.pmf, other.pmf)

    def __hash__(self) -> int:
        return hash(self.pmf.tobytes())

    def __repr__(self) -> str:
        return f"Distribution(k={self.k}, pmf={np.array2string(self.pmf, precision=6, threshold=12)})"

@dataclass(frozen=True, eq=False)
class SampleSet:
    """An ordered multiset of n domain elements plus its histogram."""

    samples: IntArray
    """The drawn symbols in draw order, each in 1..k."""
    counts: IntArray
    """The histogram of the samples, counts[i - 1] is the number of occurrences of symbol i."""
    seed: int
    """The seed the samples were drawn with."""

    @property
    def n(self) -> int:
        """The number of samples."""
        return int(self.samples.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampleSet):
            return NotImplemented
        return self.seed == other.seed \
            and np.array_equal(self.samples, other.samples) \
            and np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash((self.seed, self.samples.tobytes()))

@dataclass(frozen=True)
class FamilySpec:
    """Describes a member of a named distribution family."""

    family: Family
    """The family name."""
    k: int
    """The domain size."""
    params: Mapping[str, float] = field(default_factory=dict)
    """
    Family parameters: `index` (point_mass, 1-based), `bias` (two_point, mass of symbol 1),
    `exponent` (zipf) and `concentration` (dirichlet).
    """
    seed: int = 0
    """The seed used to draw a dirichlet distribution. Ignored for other families."""

def generator(seed: int) -> np.random.Generator:
    """
    Creates the project-wide random generator for the given seed.

    Parameters
    ----------
    seed
        A 64-bit unsigned integer.

    Raises
    ------
    InvalidParam
        The seed is not a 64-bit unsigned integer.
    """
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MAX_SEED:
        raise InvalidParam(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(int(seed)))

def derive_seed(base_seed: int, index: int) -> int:
    """
    Derives the seed of the `index`-th stream from a base seed. This is the
    splitmix64 step applied to `base_seed + (index + 1) * 0x9E3779B97F4A7C15`.
    The function is fixed, experiment goldens depend on it.
    """
    mask = MAX_SEED
    z = (base_seed + (index + 1) * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)

def make_distribution(pmf: Union[Sequence[float], npt.ArrayLike]) -> Distribution:
    """
    Validates the given probability vector and creates a distribution from it.
    The stored values are renormalized to sum to one.

    Parameters
    ----------
    pmf
        The probabilities of the symbols 1..k.

    Raises
    ------
    EmptyDomain
        The vector is empty.
    InvalidParam
        An entry is not finite.
    NegativeMass
        An entry is negative.
    NotNormalized
        The entries do not sum to one (within 1e-9).
    """
    arr = np.array(pmf, dtype=np.float64).reshape(-1)
    if arr.shape[0] == 0:
        raise EmptyDomain("A distribution needs at least one symbol")
    if not np.all(np.isfinite(arr)):
        raise InvalidParam("All probabilities must be finite")
    if np.any(arr < 0):
        i = int(np.argmax(arr < 0))
        raise NegativeMass(f"Symbol {i + 1} has negative mass {arr[i]}")
    total = math.fsum(arr.tolist())
    if abs(total - 1.0) > CONSTRUCTION_TOLERANCE:
        raise NotNormalized(f"Probabilities sum to {total!r}, not 1")
    return Distribution(_readonly(arr / total))

def _param(spec: FamilySpec, name: str, default: Optional[float] = None) -> float:
    if name not in spec.params:
        if default is None:
            raise InvalidParam(f"Family '{spec.family}' requires parameter '{name}'")
        return default
    return float_from_json(spec.params[name], f"parameter '{name}'")

def from_family(spec: FamilySpec) -> Distribution:
    """
    Creates the distribution described by the given family specification.
    The result is deterministic, dirichlet draws depend only on `spec.seed`.

    Parameters
    ----------
    spec
        The family specification.

    Raises
    ------
    InvalidParam
        The family is unknown or its parameters are invalid.
    """
    k = spec.k
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise InvalidParam(f"Domain size must be a positive integer, got {k!r}")

    if spec.family == "uniform":
        return make_distribution(np.full(k, 1.0 / k))

    if spec.family == "point_mass":
        index = _param(spec, "index", 1.0)
        if index != int(index) or not 1 <= index <= k:
            raise InvalidParam(f"Point mass index must be in [1, {k}], got {index}")
        pmf = np.zeros(k)
        pmf[int(index) - 1] = 1.0
        return make_distribution(pmf)

    if spec.family == "two_point":
        bias = _param(spec, "bias", 0.5)
        if k < 2:
            raise InvalidParam("A two point distribution needs k >= 2")
        if not 0.0 <= bias <= 1.0:
            raise InvalidParam(f"Two point bias must be in [0, 1], got {bias}")
        pmf = np.zeros(k)
        pmf[0] = bias
        pmf[-1] = 1.0 - bias
        return make_distribution(pmf)

    if spec.family == "zipf":
        exponent = _param(spec, "exponent", 1.0)
        if not exponent > 0:
            raise InvalidParam(f"Zipf exponent must be positive, got {exponent}")
        weights = np.arange(1, k + 1, dtype=np.float64) ** -exponent
        return make_distribution(weights / math.fsum(weights.tolist()))

    if spec.family == "dirichlet":
        concentration = _param(spec, "concentration", 1.0)
        if not concentration > 0:
            raise InvalidParam(f"Dirichlet concentration must be positive, got {concentration}")
        draw = generator(spec.seed).dirichlet(np.full(k, concentration))
        return make_distribution(draw / math.fsum(draw.tolist()))

    raise InvalidParam(f"Unknown distribution family '{spec.family}', expected one of {', '.join(get_args(Family))}")

def sample(dist: Distribution, n: int, seed: int) -> SampleSet:
    """
    Draws n i.i.d. samples from the given distribution, by inverse-cdf lookup of uniform
    variates in the cumulative table (binary search). The output is a pure function of
    (dist, n, seed).

    Parameters
    ----------
    dist
        The distribution to sample from.
    n
        The number of samples, at least 1.
    seed
        A 64-bit unsigned seed.

    Returns
    -------
    SampleSet
        The drawn samples and their histogram.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParam(f"Number of samples must be a positive integer, got {n!r}")
    u = generator(seed).random(int(n))
    index = np.searchsorted(dist.cumulative, u, side="right")
    np.minimum(index, dist.k - 1, out=index)
    counts = np.bincount(index, minlength=dist.k).astype(np.int64)
    return SampleSet(samples=_readonly((index + 1).astype(np.int64)), counts=_readonly(counts), seed=int(seed))

def make_sample_set(samples: Sequence[int], seed: int = 0, k: Optional[int] = None) -> SampleSet:
    """
    Creates a sample set from explicitly given symbols. The histogram covers
    the symbols 1..max(k, largest sample).

    Raises
    ------
    InvalidParam
        The list is empty or contains a symbol smaller than 1.
    """
    arr = np.array(samples, dtype=np.int64).reshape(-1)
    if arr.shape[0] == 0:
        raise InvalidParam("A sample set needs at least one sample")
    if np.any(arr < 1):
        raise InvalidParam("Samples are symbols of the domain [k] and must be at least 1")
    size = max(int(arr.max()), k or 0)
    counts = np.bincount(arr - 1, minlength=size).astype(np.int64)
    return SampleSet(samples=_readonly(arr), counts=_readonly(counts), seed=seed)

def cdf(dist: Distribution) -> FloatArray:
    """Returns the cumulative distribution function F with F[i - 1] = p(1) + ... + p(i)."""
    return np.cumsum(dist.pmf)

def support(dist: Distribution) -> list[int]:
    """Returns the symbols with positive mass."""
    return [int(i) + 1 for i in np.flatnonzero(dist.pmf > 0)]

def parse_distribution_spec(obj: Any) -> Distribution:
    """
    Creates a distribution from its json specification, which is either
    `{"pmf": [...]}` or `{"family": ..., "k": N, "params": {...}, "seed": N}`.

    Raises
    ------
    InvalidParam
        The specification is malformed.
    """
    if not isinstance(obj, dict):
        raise InvalidParam(f"A distribution specification must be an object, not {type(obj).__name__}")
    if "pmf" in obj:
        if set(obj) != {"pmf"}:
            raise InvalidParam("A pmf specification must not have other keys")
        if not isinstance(obj["pmf"], list):
            raise InvalidParam("'pmf' must be a list of numbers")
        return make_distribution([float_from_json(x, "pmf entry") for x in obj["pmf"]])
    return from_family(family_spec_from_json(obj))

def family_spec_from_json(obj: Mapping[str, Any]) -> FamilySpec:
    """Parses a family specification from its json form."""
    unknown = set(obj) - {"family", "k", "params", "seed"}
    if unknown:
        raise InvalidParam(f"Unknown keys in distribution specification: {', '.join(sorted(unknown))}")
    if "family" not in obj or "k" not in obj:
        raise InvalidParam("A family specification requires 'family' and 'k'")
    family = obj["family"]
    # The cli accepts "point" as shorthand
    if family == "point":
        family = "point_mass"
    if family not in get_args(Family):
        raise InvalidParam(f"Unknown distribution family '{family}', expected one of {', '.join(get_args(Family))}")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise InvalidParam("'params' must be an object")
    k = obj["k"]
    seed = obj.get("seed", 0)
    if isinstance(k, bool) or not isinstance(k, int):
        raise InvalidParam("'k' must be an integer")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise InvalidParam("'seed' must be an integer")
    return FamilySpec(family=family, k=k, params=dict(params), seed=seed)

def family_spec_to_json(spec: FamilySpec) -> dict[str, Any]:
    """Encodes a family specification as json."""
    return {"family": spec.family, "k": spec.k, "params": dict(spec.params), "seed": spec.seed}

def distribution_to_json(dist: Distribution) -> dict[str, Any]:
    """Encodes a distribution as `{"pmf": [...]}`."""
    return {"pmf": dist.pmf.tolist()}

def sample_set_to_json(s: SampleSet) -> dict[str, Any]:
    """Encodes a sample set as `{"n": ..., "seed": ..., "counts": [...]}`."""
    return {"n": s.n, "seed": s.seed, "counts": s.counts.tolist()}
