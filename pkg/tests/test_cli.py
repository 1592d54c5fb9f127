import json
import subprocess
import sys

import pytest

from cortex_bench.assembly import load_stimuli
from cortex_bench.cli import (
    EXIT_CHECKSUM,
    EXIT_DATA,
    EXIT_MISSING_INPUT,
    EXIT_OK,
    EXIT_SCHEMA,
    EXIT_SHAPE,
    EXIT_USAGE,
    main,
)
from cortex_bench.model import cornet_s

TINY_MODEL = cornet_s(num_classes=4, input_size=32, width_divisor=32).to_dict()


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def manifest(directory, command):
    return json.loads((directory / f"{command}.manifest.json").read_text())


def write_config(path, **cfg):
    path.write_text(json.dumps(cfg))
    return path


@pytest.mark.parametrize("scores, expected", [
    ((".65", ".6", ".382", ".25"), "0.4705"),
    ((".65", ".6", ".382"), "0.544"),
    (("0", "0", "0", "0"), "0"),
])
def test_composite_prints_exact_mean(capsys, scores, expected):
    code, out, _ = run(capsys, "score", "--composite", *scores)
    assert code == EXIT_OK and out.strip() == expected


def test_composite_rejects_wrong_arity(capsys, tmp_path):
    code, _, err = run(capsys, "score", "--composite", ".5", ".5", "--out", tmp_path)
    assert code == EXIT_SCHEMA and json.loads(err)["exit_code"] == EXIT_SCHEMA


def test_gen_zero_images(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "--n", 0, "--out", tmp_path)
    assert code == EXIT_OK and json.loads(out) == {"train_images": 0}
    assert len(load_stimuli(tmp_path / "train.stimuli")) == 0
    assert "train.stimuli" in manifest(tmp_path, "gen")["outputs"]


def test_gen_rerun_overwrites_identically(capsys, tmp_path):
    args = ("gen", "--n", 16, "--bench-n", 20, "--size", 16, "--categories", 4, "--out", tmp_path, "--seed", 3)
    run(capsys, *args)
    first = manifest(tmp_path, "gen")["outputs"]
    run(capsys, *args)
    assert manifest(tmp_path, "gen")["outputs"] == first
    assert set(first) == {"train.stimuli", "bench.stimuli", "targets"}


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """gen, train and extract on a tiny model; returns the output directory."""
    out = tmp_path_factory.mktemp("pipe")
    assert main(["gen", "--n", "24", "--bench-n", "40", "--size", "32", "--categories", "4", "--out", str(out)]) == 0
    cfg = write_config(out / "train.json", model=TINY_MODEL, epochs=2, batch=8)
    assert main(["train", "--config", str(cfg), "--seed", "7", "--out", str(out)]) == 0
    assert main(["extract", "--area", "V4", "--area", "IT", "--out", str(out)]) == 0
    return out


def test_train_twice_gives_identical_checkpoints(capsys, pipeline, tmp_path):
    first = manifest(pipeline, "train")["outputs"]
    cfg = write_config(tmp_path / "train.json", model=TINY_MODEL, epochs=2, batch=8)
    code, out, _ = run(capsys, "train", "--config", cfg, "--seed", 7, "--data", pipeline / "train.stimuli",
                       "--out", tmp_path)
    assert code == EXIT_OK
    assert manifest(tmp_path, "train")["outputs"] == first
    assert json.loads(out)["sha256"] == first["model.ckpt"]


def test_extract_writes_both_areas(pipeline):
    outputs = manifest(pipeline, "extract")["outputs"]
    assert set(outputs) == {"features_V4.assembly", "features_IT.assembly"}


def test_score_and_report(capsys, pipeline, tmp_path):
    cfg = write_config(tmp_path / "score.json", folds=3, n_pca=20, n_pls=5, probe=True)
    code, out, _ = run(capsys, "score", "--config", cfg, "--out", pipeline)
    assert code == EXIT_OK
    summary = json.loads(out)
    assert set(summary["benchmarks"]) == {"v4", "it", "behavior", "ost"}
    assert 0.0 <= summary["extras"]["probe_accuracy"] <= 1.0
    card = pipeline / "scorecard.json"
    assert card.exists()

    # a two-epoch model leaves some benchmarks undefined, so plot a score that always exists
    code, out, _ = run(capsys, "report", "--scorecards", card, card, "--names", "a", "b", "--y", "it",
                       "--out", tmp_path)
    assert code == EXIT_OK and out.splitlines()[0].split()[:2] == ["model", "v4"]
    svg = (tmp_path / "report.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<circle") == 2
    assert (tmp_path / "report.csv").read_text().count("\n") == 3


def test_missing_input_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--data", tmp_path / "nope.stimuli", "--out", tmp_path)
    assert code == EXIT_MISSING_INPUT
    assert json.loads(err) == {"error": "FileNotFoundError", "message": f"input not found: {tmp_path / 'nope.stimuli'}",
                               "exit_code": EXIT_MISSING_INPUT}


@pytest.mark.parametrize("cfg", [{"bogus": 1}, {"schema_version": 9}, [1, 2]])
def test_schema_violation_exit_code(capsys, tmp_path, cfg):
    path = tmp_path / "gen.json"
    path.write_text(json.dumps(cfg))
    code, _, err = run(capsys, "gen", "--config", path, "--out", tmp_path)
    assert code == EXIT_SCHEMA and json.loads(err)["error"] == "ConfigError"


def test_usage_error_exit_code(capsys):
    code, _, _ = run(capsys, "gen", "--n", "many")
    assert code == EXIT_USAGE


def test_empty_training_set_exit_code(capsys, tmp_path):
    run(capsys, "gen", "--n", 0, "--size", 16, "--out", tmp_path)
    code, _, err = run(capsys, "train", "--out", tmp_path)
    assert code == EXIT_DATA and "empty" in json.loads(err)["message"]


def test_corrupt_features_exit_code(capsys, pipeline, tmp_path):
    import shutil

    bad = shutil.copytree(pipeline / "features_IT.assembly", tmp_path / "features_IT.assembly")
    blob = bad / "data.bin"
    blob.write_bytes(blob.read_bytes()[:-4])
    code, _, _ = run(capsys, "score", "--features", bad, "--targets", pipeline / "targets", "--out", tmp_path)
    assert code == EXIT_CHECKSUM


def test_mismatched_stimuli_exit_code(capsys, pipeline, tmp_path):
    run(capsys, "gen", "--n", 0, "--bench-n", 30, "--size", 32, "--categories", 4, "--seed", 5, "--out", tmp_path)
    code, _, err = run(capsys, "score", "--features", pipeline / "features_IT.assembly", "--targets",
                       tmp_path / "targets", "--folds", 3, "--out", tmp_path)
    assert code == EXIT_SHAPE, err


def test_help_documents_exit_codes():
    res = subprocess.run([sys.executable, "-m", "cortex_bench", "score", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for code in range(8):
        assert f"  {code}  " in res.stdout
