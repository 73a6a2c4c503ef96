import json

import numpy as np
import pytest

from sirl_swarm import settings as s
from sirl_swarm.common import get_output_filename, read_config, safe_get_parameter, stream_rng, validate_config
from sirl_swarm.utils.profiler import RoundProfiler, SectionTimer


def test_validate_config():
    assert validate_config({"experiment": {"method": s.DC, "seed": 3}, "medium": {"decay_rate": 0.1}})
    with pytest.raises(AssertionError):
        validate_config({"experiment": {"method": "A2C"}})
    with pytest.raises(AssertionError):
        validate_config({"experiment": {"seed": -1}})
    with pytest.raises(AssertionError):
        validate_config({"experiment": {"method": s.CS}})
    with pytest.raises(AssertionError):
        validate_config({"medium": {"diffusion_rate": 2.0}})
    with pytest.raises(AssertionError):
        validate_config({"medium": {"mark_labeled": "yes"}})
    with pytest.raises(AssertionError):
        validate_config({"agent": {"gamma2": 1.5}})
    with pytest.raises(AssertionError):
        validate_config({"train": {"t_max": 0}})


def test_read_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"experiment": {"shape": "square3", "seed": 2}}))
    assert read_config(path)["experiment"]["seed"] == 2
    with pytest.raises(FileNotFoundError):
        read_config(tmp_path / "missing.json")


def test_safe_get_parameter():
    config = {"train": {"t_max": 5}}
    assert safe_get_parameter(config, ["train", "t_max"]) == 5
    assert safe_get_parameter(config, ["train", "rounds"], 10) == 10
    assert safe_get_parameter(config, ["test", "iterations"], 3) == 3
    with pytest.raises(ValueError):
        safe_get_parameter(config, ["train", "rounds"], required=True)


def test_output_filenames():
    assert get_output_filename("TRAIN_METRICS") == "train_metrics.csv"
    assert get_output_filename("CHECKPOINT", 250) == "brain_000250.check"
    with pytest.raises(ValueError):
        get_output_filename("CHECKPOINT")


def test_random_streams_are_keyed():
    a = stream_rng(1, "action", 3, 1, 2, 0).random(4)
    b = stream_rng(1, "action", 3, 1, 2, 0).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, stream_rng(1, "action", 3, 1, 2, 1).random(4))
    assert not np.array_equal(a, stream_rng(1, "attractor", 3, 1, 2, 0).random(4))
    assert not np.array_equal(a, stream_rng(2, "action", 3, 1, 2, 0).random(4))


def test_section_timer():
    timer = SectionTimer()
    with timer.section("act"):
        pass
    with timer.section("act"):
        pass
    with timer.section("skip", enable=False):
        pass
    data = timer.get_data()
    assert data["act"]["calls"] == 2
    assert data["act"]["dt"] >= 0.0
    assert "skip" not in data


def test_round_profiler_is_a_singleton():
    profiler = RoundProfiler()
    assert RoundProfiler() is profiler
    profiler.reset()
    assert profiler.get_data()["window"] == 0
    with profiler.section("observe", enable=True):
        pass
    assert profiler.get_data()["window"] == 0
    profiler.start_round()
    with profiler.section("observe"):
        pass
    assert profiler.get_data()["mean"]["observe"]["calls"] == 1
    profiler.reset()
