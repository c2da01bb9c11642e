import json

import pytest

from patchqc.cli import build_parser, main

SEG_FLAGS = ["--patch", "16", "--stride-seg", "8", "--stride-map", "4",
             "--backend", "oracle-noise", "--bias-sigma", "1.0",
             "--field-sigma", "0.5", "--backend-seed", "23",
             "--corrupt-from-grades", "erase-half"]


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the whole five-stage workflow once; tests inspect the artifacts."""
    root = tmp_path_factory.mktemp("cli")
    ds, run = root / "ds", root / "run"
    assert main(["phantom", "gen", "--out", str(ds), "--slices", "2",
                 "--seed", "4", "--dims", "64", "64", "6",
                 "--hard-frames", "2"]) == 0
    assert main(["segment", "--dataset", str(ds), "--out", str(run),
                 *SEG_FLAGS]) == 0
    assert main(["refer", "--run", str(run), "--strategy", "dqc",
                 "--budget", "0.5"]) == 0
    assert main(["correct", "--run", str(run)]) == 0
    assert main(["evaluate", "--run", str(run)]) == 0
    return root


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["segment", "--help"])
    assert exc.value.code == 0
    assert "--stride-seg" in capsys.readouterr().out


def test_usage_errors_exit_two(capsys):
    for argv in (["refer", "--run", "x", "--budget", "1.5"],
                 ["refer", "--run", "x", "--budget", "0"],
                 ["nonsense"],
                 ["segment"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2, argv
    capsys.readouterr()


def test_domain_errors_exit_one(tmp_path, capsys):
    assert main(["refer", "--run", str(tmp_path / "missing")]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["phantom", "gen", "--out", str(tmp_path / "ds"),
                 "--slices", "0"]) == 1
    assert main(["evaluate", "--run", str(tmp_path / "missing")]) == 1
    capsys.readouterr()


def test_pipeline_artifacts(pipeline):
    run = pipeline / "run"
    for rel in ("config.json", "qc.json", "metrics.csv", "report.json",
                "report.txt", "referrals.json", "corrections.json", "eval.json"):
        assert (run / rel).is_file(), rel
    ref = json.loads((run / "referrals.json").read_text())
    assert ref["strategy"] == "dqc"
    assert len(ref["selected"]) == 6          # floor(0.5 * 12 + 0.5)
    corr = json.loads((run / "corrections.json").read_text())
    assert len(corr) == 6
    assert {c["slice"] for c in corr} <= {"slice000", "slice001"}


def test_evaluate_reflects_corrections(pipeline):
    run = pipeline / "run"
    evaluation = json.loads((run / "eval.json").read_text())
    report = json.loads((run / "report.json").read_text())
    assert evaluation["corrections_applied"] == 6
    assert evaluation["dice"]["mean"] >= report["dice"]["mean"]
    assert evaluation["failure_prevalence"] <= report["failure_prevalence"]


def test_evaluate_missing_corrections_path(pipeline, tmp_path, capsys):
    code = main(["evaluate", "--run", str(pipeline / "run"),
                 "--corrections", str(tmp_path / "nope.json")])
    assert code == 1
    assert "does not exist" in capsys.readouterr().err


def test_experiment_baseline_matches_segment(pipeline, tmp_path, capsys):
    assert main(["experiment", "baseline", "--dataset", str(pipeline / "ds"),
                 "--out", str(tmp_path / "run2"), *SEG_FLAGS]) == 0
    capsys.readouterr()
    assert (tmp_path / "run2" / "report.json").read_bytes() == \
        (pipeline / "run" / "report.json").read_bytes()


def test_experiment_hitl_and_difficulty(pipeline, tmp_path, capsys):
    run = pipeline / "run"
    assert main(["experiment", "hitl", "--run", str(run),
                 "--out", str(tmp_path / "hitl"), "--budget", "0.5",
                 "--mc", "3"]) == 0
    out = capsys.readouterr().out
    assert "dqc-guided" in out and "random (MC mean)" in out
    report = json.loads((tmp_path / "hitl" / "report.json").read_text())
    assert report["experiment"] == "hitl" and report["n_selected"] == 6

    assert main(["experiment", "difficulty", "--run", str(run),
                 "--out", str(tmp_path / "diff")]) == 0
    assert "mean AUC" in capsys.readouterr().out
    report = json.loads((tmp_path / "diff" / "report.json").read_text())
    assert report["experiment"] == "difficulty" and report["n_valid"] == 2


def test_toml_config_overrides_flags(pipeline, tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('[backend]\nbias_sigma = 0.25\nfield_sigma = 0.0\n')
    assert main(["segment", "--dataset", str(pipeline / "ds"),
                 "--out", str(tmp_path / "run3"), *SEG_FLAGS,
                 "--config", str(cfg)]) == 0
    capsys.readouterr()
    config = json.loads((tmp_path / "run3" / "config.json").read_text())
    assert config["backend"]["bias_sigma"] == 0.25
    assert config["backend"]["field_sigma"] == 0.0
    assert config["backend"]["corrupt_from_grades"] == "erase-half"


def test_serve_missing_run_exits_one(tmp_path, capsys):
    assert main(["serve", "--run", str(tmp_path / "missing"),
                 "--port", "0"]) == 1
    assert "error:" in capsys.readouterr().err
