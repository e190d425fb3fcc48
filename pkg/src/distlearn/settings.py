"""
Provides the experiment configuration. Settings from a json config file are
overlayed by settings given as command line flags, which are finally resolved
against defaults into a validated `ExperimentConfig`.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields
from typing import Any, Literal, Optional, Union, get_args

from distlearn.bounds import BoundRequest, Tier, sample_size
from distlearn.core import Distribution, FamilySpec, MAX_SEED, family_spec_from_json, family_spec_to_json, from_family, make_distribution
from distlearn.estimators import EMPIRICAL, EstimatorKind
from distlearn.metrics import METRIC_KINDS
from distlearn.utils import DistlearnError, InvalidConfig, float_from_json

Mode = Literal["expectation", "failure-rate", "tail-curve", "kl-unbounded"]
"""The kinds of experiments."""

Direction = Literal["forward", "reverse"]
"""Whether the metric is evaluated as d(p, estimate) (forward) or d(estimate, p) (reverse)."""

Against = Literal["delta", "tail"]
"""What the failure rate is compared with."""

DistSpec = Union[FamilySpec, tuple[float, ...]]
"""Either a named family or an explicit probability vector."""

DEFAULT_TRIALS = 10_000
"""The default number of trials per experiment."""

SEED_ENV = "DISTLEARN_SEED"
"""Environment variable providing the default base seed."""

THREADS_ENV = "DISTLEARN_THREADS"
"""Environment variable providing the default number of worker threads."""

@dataclass(frozen=True)
class ExperimentConfig:
    """
    A resolved experiment configuration. This has the same content as
    `ExperimentSettings`, but every value is validated and present.
    """
    mode: Mode
    dist: DistSpec
    estimator: EstimatorKind
    metric: str
    n: int
    trials: int
    base_seed: int
    threads: int = 1
    thresholds: Optional[tuple[float, ...]] = None
    eps: Optional[float] = None
    delta: Optional[float] = None
    squared: bool = False
    direction: Direction = "forward"
    against: Against = "delta"
    tier: Optional[Tier] = None
    tiny_mass: Optional[float] = None

    def distribution(self) -> Distribution:
        """Creates the true distribution of the experiment."""
        if isinstance(self.dist, FamilySpec):
            return from_family(self.dist)
        return make_distribution(self.dist)

    def k(self) -> int:
        """The domain size."""
        if isinstance(self.dist, FamilySpec):
            return self.dist.k
        return len(self.dist)

    def to_json(self) -> dict[str, Any]:
        """Encodes the configuration as json, in the same format `ExperimentSettings.from_json` reads."""
        ret: dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "dist":
                value = family_spec_to_json(value) if isinstance(value, FamilySpec) else {"pmf": list(value)}
            elif f.name == "estimator":
                value = str(value)
            elif f.name == "thresholds":
                value = list(value)
            ret[f.name] = value
        return ret

@dataclass(frozen=True)
class ExperimentSettings:
    """
    Partial experiment settings. Every value may be None, meaning it is
    taken from the settings this is overlayed onto, or from the defaults.
    """
    mode: Optional[Mode] = None
    dist: Optional[DistSpec] = None
    estimator: Optional[EstimatorKind] = None
    metric: Optional[str] = None
    n: Optional[int] = None
    auto_n: Optional[bool] = None
    trials: Optional[int] = None
    base_seed: Optional[int] = None
    threads: Optional[int] = None
    thresholds: Optional[tuple[float, ...]] = None
    eps: Optional[float] = None
    delta: Optional[float] = None
    squared: Optional[bool] = None
    direction: Optional[Direction] = None
    against: Optional[Against] = None
    tier: Optional[Tier] = None
    tiny_mass: Optional[float] = None

    def overlay(self, settings: ExperimentSettings) -> ExperimentSettings:
        """
        Overlays settings on top of this. Values will only be overwritten
        if the new value is not None.

        Parameters
        ----------
        settings
            The setting values to overwrite

        Returns
        -------
        ExperimentSettings
            The resulting overlayed settings
        """
        return ExperimentSettings(**{f.name: getattr(self, f.name) if getattr(settings, f.name) is None else getattr(settings, f.name)
                                     for f in fields(self)})

    @staticmethod
    def from_json(obj: Any) -> ExperimentSettings:
        """
        Parses settings from a json object. The keys are the field names,
        `seed` is accepted as an alias of `base_seed`.

        Raises
        ------
        InvalidConfig
            The object has unknown keys or values of the wrong type.
        """
        if not isinstance(obj, dict):
            raise InvalidConfig(f"An experiment configuration must be an object, not {type(obj).__name__}")
        obj = dict(obj)
        if "seed" in obj:
            if "base_seed" in obj:
                raise InvalidConfig("Only one of 'seed' and 'base_seed' may be given")
            obj["base_seed"] = obj.pop("seed")

        known = {f.name for f in fields(ExperimentSettings)}
        unknown = set(obj) - known
        if unknown:
            raise InvalidConfig(f"Unknown configuration keys: {', '.join(sorted(unknown))}")

        try:
            values: dict[str, Any] = {}
            for key, value in obj.items():
                if value is None:
                    continue
                if key == "dist":
                    values[key] = dist_spec_from_json(value)
                elif key == "estimator":
                    values[key] = EstimatorKind.parse(_typed(key, value, str))
                elif key in ("n", "trials", "base_seed", "threads"):
                    values[key] = _typed(key, value, int)
                elif key in ("auto_n", "squared"):
                    values[key] = _typed(key, value, bool)
                elif key in ("eps", "delta", "tiny_mass"):
                    values[key] = float_from_json(value, key)
                elif key == "thresholds":
                    if not isinstance(value, list):
                        raise InvalidConfig("'thresholds' must be a list of numbers")
                    values[key] = tuple(float_from_json(t, "threshold") for t in value)
                else:
                    values[key] = _typed(key, value, str)
        except InvalidConfig:
            raise
        except DistlearnError as e:
            raise InvalidConfig(str(e)) from e
        return ExperimentSettings(**values)

    def resolve(self) -> ExperimentConfig:
        """
        Validates these settings and fills in defaults.

        Raises
        ------
        InvalidConfig
            A required value is missing, or a value is invalid.
        """
        # pylint: disable=too-many-branches
        mode = self.mode or "expectation"
        if mode not in get_args(Mode):
            raise InvalidConfig(f"Unknown mode '{mode}', expected one of {', '.join(get_args(Mode))}")
        if mode == "kl-unbounded":
            return self._resolve_kl_unbounded()

        if self.dist is None:
            raise InvalidConfig("No distribution given")
        metric = self.metric
        if metric is None:
            raise InvalidConfig("No metric given")
        if metric not in METRIC_KINDS:
            raise InvalidConfig(f"Unknown metric '{metric}', expected one of {', '.join(METRIC_KINDS)}")
        direction = self.direction or "forward"
        if direction not in get_args(Direction):
            raise InvalidConfig(f"Unknown direction '{direction}', expected forward or reverse")
        against = self.against or "delta"
        if against not in get_args(Against):
            raise InvalidConfig(f"Unknown comparison '{against}', expected delta or tail")
        if self.tier is not None and (metric != "hellinger" or self.tier not in get_args(Tier)):
            raise InvalidConfig(f"Invalid tier '{self.tier}' for metric '{metric}'")

        thresholds = self.thresholds
        if mode == "tail-curve":
            if not thresholds:
                raise InvalidConfig("A tail curve needs at least one threshold")
        if thresholds is not None:
            if any(not math.isfinite(t) or t <= 0 for t in thresholds):
                raise InvalidConfig("Thresholds must be positive")
            if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
                raise InvalidConfig("Thresholds must be strictly increasing")

        if mode == "failure-rate":
            if self.eps is None or self.delta is None:
                raise InvalidConfig("A failure rate experiment needs eps and delta")
        if self.eps is not None and (not math.isfinite(self.eps) or self.eps <= 0):
            raise InvalidConfig(f"eps must be positive, got {self.eps}")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise InvalidConfig(f"delta must be in (0, 1], got {self.delta}")

        n = self._resolve_n(metric)
        config = ExperimentConfig(
            mode=mode,
            dist=self.dist,
            estimator=self.estimator or EMPIRICAL,
            metric=metric,
            n=n,
            trials=self._resolve_trials(),
            base_seed=self._resolve_seed(),
            threads=self._resolve_threads(),
            thresholds=thresholds,
            eps=self.eps,
            delta=self.delta,
            squared=bool(self.squared),
            direction=direction,
            against=against,
            tier=self.tier,
        )
        try:
            config.distribution()
        except DistlearnError as e:
            raise InvalidConfig(f"Invalid distribution: {e}") from e
        return config

    def _resolve_kl_unbounded(self) -> ExperimentConfig:
        if self.tiny_mass is None:
            raise InvalidConfig("The kl-unbounded demo needs tiny_mass")
        k = 2
        if isinstance(self.dist, FamilySpec):
            k = self.dist.k
        elif self.dist is not None:
            k = len(self.dist)
        if k < 2:
            raise InvalidConfig("The kl-unbounded demo needs k >= 2")
        if not 0 < self.tiny_mass < 1:
            raise InvalidConfig(f"tiny_mass must be in (0, 1), got {self.tiny_mass}")
        if self.n is None:
            raise InvalidConfig("No number of samples given")
        pmf = [0.0] * k
        pmf[0] = 1.0 - self.tiny_mass
        pmf[1] = self.tiny_mass
        return ExperimentConfig(
            mode="kl-unbounded",
            dist=tuple(pmf),
            estimator=self.estimator or EMPIRICAL,
            metric="kl",
            n=self._check_positive("n", self.n),
            trials=self._resolve_trials(),
            base_seed=self._resolve_seed(),
            threads=self._resolve_threads(),
            tiny_mass=self.tiny_mass)

    def _resolve_n(self, metric: str) -> int:
        if self.auto_n:
            if self.n is not None:
                raise InvalidConfig("Only one of n and auto_n may be given")
            if self.eps is None or self.delta is None:
                raise InvalidConfig("auto_n needs eps and delta")
            k = self.dist.k if isinstance(self.dist, FamilySpec) else len(self.dist or ())
            try:
                return sample_size(BoundRequest(metric, k, self.eps, self.delta, self.tier)).n
            except DistlearnError as e:
                raise InvalidConfig(f"Cannot determine n: {e}") from e
        if self.n is None:
            raise InvalidConfig("No number of samples given (use n or auto_n)")
        return self._check_positive("n", self.n)

    def _resolve_trials(self) -> int:
        return self._check_positive("trials", DEFAULT_TRIALS if self.trials is None else self.trials)

    def _resolve_threads(self) -> int:
        threads = self.threads
        if threads is None:
            threads = default_threads()
        return self._check_positive("threads", threads)

    def _resolve_seed(self) -> int:
        seed = self.base_seed
        if seed is None:
            seed = default_seed()
        if not 0 <= seed <= MAX_SEED:
            raise InvalidConfig(f"The base seed must be an unsigned 64-bit integer, got {seed}")
        return seed

    @staticmethod
    def _check_positive(name: str, value: int) -> int:
        if value < 1:
            raise InvalidConfig(f"{name} must be at least 1, got {value}")
        return value

def default_seed() -> int:
    """Returns the base seed used when none is configured, from DISTLEARN_SEED or 0."""
    return _int_from_env(SEED_ENV, 0)

def default_threads() -> int:
    """Returns the thread count used when none is configured, from DISTLEARN_THREADS or 1."""
    return _int_from_env(THREADS_ENV, 1)

def _int_from_env(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError as e:
        raise InvalidConfig(f"Environment variable {name} must be an integer, got '{value}'") from e

def _typed(key: str, value: Any, typ: type) -> Any:
    # bool is a subclass of int, reject it explicitly for integer keys
    if not isinstance(value, typ) or (typ is int and isinstance(value, bool)):
        raise InvalidConfig(f"'{key}' must be of type {typ.__name__}, not {type(value).__name__}")
    return value

def dist_spec_from_json(obj: Any) -> DistSpec:
    """Parses the distribution of an experiment, either `{"pmf": [...]}` or a family specification."""
    if not isinstance(obj, dict):
        raise InvalidConfig("'dist' must be an object")
    if "pmf" in obj:
        if set(obj) != {"pmf"} or not isinstance(obj["pmf"], list):
            raise InvalidConfig("A pmf specification is {\"pmf\": [...]}")
        return tuple(float_from_json(x, "pmf entry") for x in obj["pmf"])
    return family_spec_from_json(obj)
