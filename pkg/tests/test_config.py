import json

import pytest

from hopfch2.config import (CONFIG_ENV_VAR, DEFAULT_GATES, PreconditionError, RunConfig, Tolerances,
                            gate_threshold, load_config)


def test_defaults():
    cfg = RunConfig()
    assert cfg.tolerances == Tolerances()
    assert cfg.gate("eta4") == DEFAULT_GATES["eta4"][0]


def test_gate_threshold_scaling():
    assert gate_threshold(1e-6, True, 1e-3) == pytest.approx(1e-4)
    assert gate_threshold(1e-6, True, 1e-6) == 1e-6
    assert gate_threshold(1e-9, False, 1e-3) == 1e-9


@pytest.mark.parametrize("kwargs", [
    {"tolerances": Tolerances(h=0.0)},
    {"grid": (3, 8, 8)},
    {"threads": 0},
    {"gates": {"eta4": -1.0}},
])
def test_validation(kwargs):
    with pytest.raises(PreconditionError):
        RunConfig(**kwargs)


def test_load_and_override(tmp_path, monkeypatch):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"tolerances": {"h": 2e-4}, "grid": [6, 6, 4], "threads": 2,
                                "gates": {"eta4": 5e-7}}))
    cfg = load_config(path)
    assert cfg.tolerances.h == 2e-4 and cfg.grid == (6, 6, 4) and cfg.threads == 2
    assert cfg.gate("eta4") == pytest.approx(2e-6)
    monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
    assert load_config().threads == 2
    upd = cfg.updated(threads=None, h=1e-4, tol_null=1e-9)
    assert upd.threads == 2 and upd.tolerances.h == 1e-4 and upd.tolerances.tol_null == 1e-9
    assert cfg.to_dict()["grid"] == [6, 6, 4]


@pytest.mark.parametrize("text,match", [
    ("{oops", "not valid JSON"),
    ("[1]", "JSON object"),
    ('{"colour": 1}', "unknown config keys"),
    ('{"tolerances": {"tol_bogus": 1}}', "tol_bogus"),
])
def test_bad_config_files(tmp_path, text, match):
    (tmp_path / "c.json").write_text(text)
    with pytest.raises(PreconditionError, match=match):
        load_config(tmp_path / "c.json")
