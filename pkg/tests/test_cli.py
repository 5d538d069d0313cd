import json

import pytest

from svxgerry import io_ingest, report
from svxgerry.cli import build_parser, main
from svxgerry.config import config_keys


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli") / "ds"
    assert main(["synth", str(root), "--videos", "2", "--frames", "5", "--size", "32"]) == 0
    return root


def test_every_config_key_has_a_flag():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices["benchmark"]
    flags = {opt for a in sub._actions for opt in a.option_strings}
    assert {f"--{k}" for k in config_keys()} <= flags


def test_segment(dataset, tmp_path, capsys):
    out = tmp_path / "seg"
    code = main(["segment", str(dataset / "square00"), "--out", str(out), "--downscale_factor", "2"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"] == "NATIVE00-L" and 0.0 <= summary["j_mean"] <= 1.0
    assert len(list((out / "masks").iterdir())) == 5
    assert "downscale_factor=2" in (out / "config.txt").read_text()
    assert '"j_mean"' in capsys.readouterr().out


def test_config_file_and_flag(dataset, tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("consensus_mode=none\n", encoding="utf-8")
    out = tmp_path / "seg"
    assert main(["segment", str(dataset / "square01"), "--out", str(out), "--config", str(cfg)]) == 0
    assert json.loads((out / "summary.json").read_text())["config"] == "MVSO"


def test_eval(dataset, capsys):
    gt = dataset / "square00" / "ground_truth"
    assert main(["eval", str(gt), str(gt), "--per_frame"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["j_mean"] == 1.0 and out["f_mean"] == 1.0 and out["per_frame_j"] == [1.0] * 5


def test_benchmark(dataset, tmp_path, capsys):
    out = tmp_path / "bench"
    args = ["benchmark", str(dataset), "--out", str(out), "--downscale_factor", "2", "--hierarchy_levels", "0,1"]
    assert main(args) == 0
    rows = report.read_csv(out / "report.csv")
    assert {r["config"] for r in rows} == {"MVSO", "NATIVE00-L", "NATIVE01-L", "NATIVEALL-L"}
    report.validate_report(json.loads((out / "report.json").read_text()))
    assert "NATIVE00-L" in capsys.readouterr().out


def test_supervoxels_export(dataset, tmp_path):
    out = tmp_path / "svx"
    assert main(["supervoxels", str(dataset / "square00"), "--out", str(out), "--svx_levels", "2"]) == 0
    labels0 = io_ingest.load_supervoxel_labels(out / "0", 5)
    labels1 = io_ingest.load_supervoxel_labels(out / "1", 5)
    assert labels0.shape == (5, 8, 8)
    assert labels1.max() <= labels0.max()


def test_errors_exit_2(tmp_path, capsys):
    assert main(["segment", str(tmp_path), "--out", str(tmp_path / "o")]) == 2
    assert "frames" in capsys.readouterr().err
    assert main(["segment", str(tmp_path), "--out", str(tmp_path / "o"), "--consensus_mode", "bogus"]) == 2
