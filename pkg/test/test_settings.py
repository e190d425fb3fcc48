import pytest

from distlearn.core import FamilySpec
from distlearn.estimators import EMPIRICAL, EstimatorKind
from distlearn.settings import DEFAULT_TRIALS, ExperimentConfig, ExperimentSettings, default_seed, dist_spec_from_json
from distlearn.utils import InvalidConfig

def uniform_settings(**kwargs) -> ExperimentSettings:
    kwargs.setdefault("mode", "expectation")
    return ExperimentSettings(dist=FamilySpec("uniform", 4), metric="tv", n=100, **kwargs)

def test_resolve_defaults(monkeypatch):
    monkeypatch.delenv("DISTLEARN_SEED", raising=False)
    monkeypatch.delenv("DISTLEARN_THREADS", raising=False)
    config = uniform_settings().resolve()
    assert config.trials == DEFAULT_TRIALS
    assert config.base_seed == 0
    assert config.threads == 1
    assert config.estimator == EMPIRICAL
    assert config.direction == "forward"
    assert config.against == "delta"
    assert not config.squared
    assert config.k() == 4

def test_environment_defaults(monkeypatch):
    monkeypatch.setenv("DISTLEARN_SEED", "99")
    monkeypatch.setenv("DISTLEARN_THREADS", "3")
    config = uniform_settings().resolve()
    assert config.base_seed == 99
    assert config.threads == 3
    assert default_seed() == 99
    assert uniform_settings(base_seed=5).resolve().base_seed == 5

def test_environment_must_be_integer(monkeypatch):
    monkeypatch.setenv("DISTLEARN_SEED", "abc")
    with pytest.raises(InvalidConfig, match=r"DISTLEARN_SEED"):
        uniform_settings().resolve()

def test_overlay():
    base = ExperimentSettings(metric="tv", n=100, trials=50)
    top = ExperimentSettings(n=200, eps=0.1)
    merged = base.overlay(top)
    assert merged.metric == "tv"
    assert merged.n == 200
    assert merged.trials == 50
    assert merged.eps == 0.1

def test_from_json():
    settings = ExperimentSettings.from_json({
        "mode": "failure-rate",
        "dist": {"family": "zipf", "k": 10, "params": {"exponent": 1.0}},
        "estimator": "add-constant:1",
        "metric": "tv",
        "n": 1000,
        "eps": 0.1,
        "delta": 0.05,
        "seed": 42,
        "thresholds": [0.1, 0.2],
    })
    assert settings.dist == FamilySpec("zipf", 10, {"exponent": 1.0}, 0)
    assert settings.estimator == EstimatorKind("add-constant", 1.0)
    assert settings.base_seed == 42
    assert settings.thresholds == (0.1, 0.2)
    assert settings.resolve().mode == "failure-rate"

def test_from_json_errors():
    with pytest.raises(InvalidConfig, match=r"Unknown configuration keys: colour"):
        ExperimentSettings.from_json({"colour": "blue"})
    with pytest.raises(InvalidConfig, match=r"'n' must be of type int"):
        ExperimentSettings.from_json({"n": "100"})
    with pytest.raises(InvalidConfig, match=r"'n' must be of type int"):
        ExperimentSettings.from_json({"n": True})
    with pytest.raises(InvalidConfig, match=r"Only one of"):
        ExperimentSettings.from_json({"seed": 1, "base_seed": 2})
    with pytest.raises(InvalidConfig):
        ExperimentSettings.from_json({"estimator": "laplace"})
    with pytest.raises(InvalidConfig):
        ExperimentSettings.from_json([1, 2])
    with pytest.raises(InvalidConfig):
        ExperimentSettings.from_json({"dist": {"family": "normal", "k": 2}})

def test_to_json_roundtrip():
    config = uniform_settings(eps=0.1, delta=0.05, thresholds=(0.1, 0.2), squared=True).resolve()
    again = ExperimentSettings.from_json(config.to_json()).resolve()
    assert again == config

def test_dist_spec_from_json():
    assert dist_spec_from_json({"pmf": [0.5, 0.5]}) == (0.5, 0.5)
    assert dist_spec_from_json({"family": "uniform", "k": 3}) == FamilySpec("uniform", 3, {}, 0)
    with pytest.raises(InvalidConfig):
        dist_spec_from_json({"pmf": [0.5, 0.5], "k": 2})

def test_resolve_errors():
    with pytest.raises(InvalidConfig, match=r"No distribution"):
        ExperimentSettings(metric="tv", n=10).resolve()
    with pytest.raises(InvalidConfig, match=r"No metric"):
        ExperimentSettings(dist=FamilySpec("uniform", 2), n=10).resolve()
    with pytest.raises(InvalidConfig, match=r"Unknown metric"):
        ExperimentSettings(dist=FamilySpec("uniform", 2), metric="emd", n=10).resolve()
    with pytest.raises(InvalidConfig, match=r"No number of samples"):
        ExperimentSettings(dist=FamilySpec("uniform", 2), metric="tv").resolve()
    with pytest.raises(InvalidConfig, match=r"trials must be at least 1"):
        uniform_settings(trials=0).resolve()
    with pytest.raises(InvalidConfig, match=r"needs eps and delta"):
        uniform_settings(mode="failure-rate").resolve()
    with pytest.raises(InvalidConfig, match=r"at least one threshold"):
        uniform_settings(mode="tail-curve").resolve()
    with pytest.raises(InvalidConfig, match=r"strictly increasing"):
        uniform_settings(mode="tail-curve", thresholds=(0.2, 0.1)).resolve()
    with pytest.raises(InvalidConfig, match=r"Invalid tier"):
        uniform_settings(tier="easy").resolve()
    with pytest.raises(InvalidConfig, match=r"unsigned 64-bit"):
        uniform_settings(base_seed=-1).resolve()
    with pytest.raises(InvalidConfig, match=r"Invalid distribution"):
        ExperimentSettings(dist=(0.5, 0.6), metric="tv", n=10).resolve()
    with pytest.raises(InvalidConfig, match=r"Unknown mode"):
        uniform_settings(mode="bogus").resolve()  # type: ignore[arg-type]

def test_auto_n():
    settings = ExperimentSettings(mode="failure-rate", dist=FamilySpec("uniform", 1000), metric="tv", eps=0.1, delta=0.05, auto_n=True)
    assert settings.resolve().n == 100000
    hellinger = ExperimentSettings(dist=FamilySpec("uniform", 100), metric="hellinger", eps=0.1, delta=0.05, auto_n=True, tier="intermediate")
    assert hellinger.resolve().n == 239659
    with pytest.raises(InvalidConfig, match=r"open problem"):
        ExperimentSettings(dist=FamilySpec("uniform", 10), metric="chi2", eps=0.1, delta=0.05, auto_n=True).resolve()
    with pytest.raises(InvalidConfig, match=r"Only one of n and auto_n"):
        ExperimentSettings(dist=FamilySpec("uniform", 10), metric="tv", n=5, eps=0.1, delta=0.05, auto_n=True).resolve()
    with pytest.raises(InvalidConfig, match=r"auto_n needs eps and delta"):
        ExperimentSettings(dist=FamilySpec("uniform", 10), metric="tv", auto_n=True).resolve()

def test_kl_unbounded_settings():
    config = ExperimentSettings(mode="kl-unbounded", n=10, tiny_mass=0.25, dist=FamilySpec("uniform", 3)).resolve()
    assert isinstance(config, ExperimentConfig)
    assert config.dist == (0.75, 0.25, 0.0)
    assert config.metric == "kl"
    assert ExperimentSettings(mode="kl-unbounded", n=10, tiny_mass=0.5).resolve().k() == 2
    with pytest.raises(InvalidConfig, match=r"tiny_mass"):
        ExperimentSettings(mode="kl-unbounded", n=10).resolve()
    with pytest.raises(InvalidConfig, match=r"tiny_mass must be in"):
        ExperimentSettings(mode="kl-unbounded", n=10, tiny_mass=1.0).resolve()
    with pytest.raises(InvalidConfig, match=r"k >= 2"):
        ExperimentSettings(mode="kl-unbounded", n=10, tiny_mass=0.1, dist=(1.0,)).resolve()
