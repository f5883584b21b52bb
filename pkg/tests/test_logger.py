import json

import numpy as np
import pytest

from src.utils.logger import ActionType, _to_jsonable, log_experiment


def test_log_experiment_appends(isolated_log):
    details = {"inputs": {"R": 3.0}, "outputs": {"eta": np.array([1 + 0j, 0.5j])}}
    log_experiment("autocorr", ActionType.AUTOCORRELATE, details, "SUCCESS")
    log_experiment("diffract", "DIFFRACT", {"inputs": {}, "outputs": {}}, "FAILURE")
    entries = json.loads(isolated_log.read_text(encoding="utf-8"))
    assert [e["action"] for e in entries] == ["AUTOCORRELATE", "DIFFRACT"]
    assert entries[0]["details"]["outputs"]["eta"] == [{"re": 1.0, "im": 0.0}, {"re": 0.0, "im": 0.5}]
    assert entries[1]["status"] == "FAILURE"


def test_log_experiment_invalid_action():
    with pytest.raises(ValueError):
        log_experiment("diffract", "PLOT", {"inputs": {}, "outputs": {}}, "SUCCESS")


def test_log_experiment_missing_fields():
    with pytest.raises(ValueError):
        log_experiment("diffract", ActionType.DIFFRACT, {"inputs": {}}, "SUCCESS")


def test_log_experiment_recovers_corrupted_file(isolated_log):
    isolated_log.parent.mkdir(parents=True, exist_ok=True)
    isolated_log.write_text("[{broken", encoding="utf-8")
    log_experiment("selftest", ActionType.SELFTEST, {"inputs": {}, "outputs": {}}, "SUCCESS")
    assert len(json.loads(isolated_log.read_text(encoding="utf-8"))) == 1


def test_to_jsonable():
    assert _to_jsonable({1: (np.float64(0.5), 2j)}) == {"1": [0.5, {"re": 0.0, "im": 2.0}]}
