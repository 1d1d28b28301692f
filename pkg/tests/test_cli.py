import json
import subprocess
import sys

import pytest

from conftest import S_RANGE, T_RANGE, make_patch
from hopfch2 import io
from hopfch2.cli import EXIT_GATES, EXIT_IO, EXIT_OK, EXIT_PRECONDITION, main
from hopfch2.reconstruction import perturb_frames


def _span(r):
    return [str(x) for x in r]


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["curve", "gen", "great-circle", "-o", str(d / "c1.json")]) == EXIT_OK
    assert main(["curve", "gen", "great-circle", "--p", "1j,0", "--q", "0,1j", "-o", str(d / "c2.json")]) == EXIT_OK
    assert main(["construct", str(d / "c1.json"), str(d / "c2.json"), "--phi", "0.5",
                 "--grid", "6", "6", "4", "--s-range", *_span(S_RANGE), "--t-range", *_span(T_RANGE),
                 "-o", str(d / "patch.json")]) == EXIT_OK
    return d


def test_curve_gen_lift_and_check(tmp_path):
    out = tmp_path / "lift.json"
    assert main(["curve", "gen", "lift", "--base", "equator", "-o", str(out)]) == EXIT_OK
    assert main(["curve", "check", str(out)]) == EXIT_OK


def test_curve_gen_rejections(tmp_path):
    assert main(["curve", "gen", "great-circle", "--p", "1,0", "--q", "1,0", "-o", str(tmp_path / "x.json")]) \
        == EXIT_PRECONDITION
    assert main(["curve", "gen", "twisted", "-o", str(tmp_path / "t.json")]) == EXIT_PRECONDITION
    assert not (tmp_path / "t.json").exists()
    assert main(["curve", "gen", "twisted", "--allow-inadmissible", "-o", str(tmp_path / "t.json")]) == EXIT_OK
    assert main(["curve", "check", str(tmp_path / "t.json")]) == EXIT_PRECONDITION


def test_verify_writes_report_and_figures(work, capsys):
    out = work / "report.json"
    assert main(["verify", str(work / "patch.json"), "-o", str(out)]) == EXIT_OK
    assert "all gates pass" in capsys.readouterr().out
    assert io.read_report(out)["passed"]
    for suffix in (".nodes.csv", ".gates.csv", ".gates.png", ".curvatures.png", ".ball.png"):
        assert (work / f"report{suffix}").stat().st_size > 0


def test_verify_gate_failure(work, circles, tmp_path):
    bad = perturb_frames(make_patch(circles, 0.5, shape=(6, 6, 4)), 1e-3, seed=1)
    io.write_patch(tmp_path / "bad.npz", bad)
    assert main(["verify", str(tmp_path / "bad.npz"), "-o", str(tmp_path / "r.json"), "--no-figures"]) \
        == EXIT_GATES
    assert not (tmp_path / "r.gates.png").exists()


def test_h_flag_overrides_config(work, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tolerances": {"h": 3e-4}}))
    out = tmp_path / "r.json"
    assert main(["verify", str(work / "patch.json"), "-o", str(out), "--no-figures",
                 "--config", str(cfg)]) == EXIT_OK
    assert io.read_report(out)["h"] == 3e-4
    assert main(["verify", str(work / "patch.json"), "-o", str(out), "--no-figures",
                 "--config", str(cfg), "--h", "1e-4"]) == EXIT_OK
    assert io.read_report(out)["h"] == 1e-4


def test_config_from_environment(work, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"threads": 0}))
    monkeypatch.setenv("HOPFCH2_CONFIG", str(cfg))
    assert main(["curve", "check", str(work / "c1.json")]) == EXIT_PRECONDITION


def test_construct_rejections(work, tmp_path):
    args = ["construct", str(work / "c1.json"), str(work / "c2.json"), "-o", str(tmp_path / "p.json")]
    assert main(args + ["--phi", "1.6"]) == EXIT_PRECONDITION
    assert main(args + ["--r", "-1"]) == EXIT_PRECONDITION
    assert main(["construct", str(work / "c1.json"), str(tmp_path / "absent.json"),
                 "-o", str(tmp_path / "p.json")]) == EXIT_IO
    (tmp_path / "junk.json").write_text("{junk")
    assert main(["construct", str(work / "c1.json"), str(tmp_path / "junk.json"),
                 "-o", str(tmp_path / "p.json")]) == EXIT_IO


def test_oracle(tmp_path, capsys):
    out = tmp_path / "oracle.json"
    assert main(["oracle", "horosphere", "--grid", "3", "3", "3", "-o", str(out)]) == EXIT_OK
    assert "expected 1 1 2" in capsys.readouterr().out
    assert (tmp_path / "oracle.spectrum.png").exists()
    assert main(["oracle", "horosphere", "--level", "0", "-o", str(out)]) == EXIT_PRECONDITION


def test_export(work):
    out = work / "mesh.obj"
    assert main(["export", str(work / "patch.json"), "--slice", "tau=1", "-o", str(out)]) == EXIT_OK
    assert out.read_text().count("\nf ") == 25
    assert (work / "mesh.csv").exists()
    assert main(["export", str(work / "patch.json"), "--slice", "tau=9", "-o", str(out)]) == EXIT_PRECONDITION
    assert main(["export", str(work / "patch.json"), "--projection", "w9", "-o", str(out)]) \
        == EXIT_PRECONDITION


def test_module_entry_point(work):
    res = subprocess.run([sys.executable, "-m", "hopfch2", "curve", "check", str(work / "c1.json")],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "great-circle" in res.stdout
