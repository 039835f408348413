import json

import numpy as np
import pytest

from ncpoly.suite import PROPERTIES, Outcome, Property, SuiteConfig, run_suite, trial_rng
import ncpoly.suite as suite_mod


def test_registry_covers_modules():
    modules = {p.module for p in PROPERTIES}
    assert {"linalg-core", "measure-space", "classical", "povm", "dilation", "opkernels", "qpoly", "states"} <= modules
    assert len({p.name for p in PROPERTIES}) == len(PROPERTIES)


def test_trial_rng_is_counter_based():
    a = trial_rng(5, "x", 3).random(4)
    assert np.array_equal(a, trial_rng(5, "x", 3).random(4))
    assert not np.array_equal(a, trial_rng(5, "x", 4).random(4))
    assert not np.array_equal(a, trial_rng(5, "y", 3).random(4))


def test_config_validation():
    with pytest.raises(ValueError):
        SuiteConfig(trials=0)
    with pytest.raises(ValueError):
        SuiteConfig(seed=-1)


def test_deterministic_across_workers():
    a = run_suite(SuiteConfig(seed=11, trials=3, workers=1))
    b = run_suite(SuiteConfig(seed=11, trials=3, workers=4))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["pass"]


def test_failure_reports_minimal_instance(monkeypatch):
    def flaky(rng, cfg):
        size = int(rng.integers(1, 10))
        return Outcome(size < 5, float(size), size, lambda: {"size": size})

    monkeypatch.setattr(suite_mod, "PROPERTIES", [Property("flaky", "test", "fails on big draws", flaky)])
    rep = suite_mod.run_suite(SuiteConfig(seed=2, trials=30))
    entry = rep["properties"]["flaky"]
    assert not rep["pass"] and entry["failed"] > 0
    assert entry["minimal_failure"]["size"] == 5
    assert entry["minimal_failure"]["instance"] == {"size": 5}
    assert len(entry["failing_seeds"]) == entry["failed"]


def test_crash_counts_as_failure(monkeypatch):
    def boom(rng, cfg):
        raise RuntimeError("boom")

    monkeypatch.setattr(suite_mod, "PROPERTIES", [Property("boom", "test", "always crashes", boom)])
    rep = suite_mod.run_suite(SuiteConfig(trials=2))
    assert "boom" in rep["properties"]["boom"]["minimal_failure"]["error"]


def test_only_filter():
    rep = run_suite(SuiteConfig(trials=2, only=("states",)))
    assert {e["module"] for e in rep["properties"].values()} == {"states"}
