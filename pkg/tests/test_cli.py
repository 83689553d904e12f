import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from leafwater.cli import MANIFEST_NAME, dispatch

FAST = ["--gbm-trees", "20", "--rf-trees", "10", "--n-lambdas", "10"]


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert dispatch(["synth", "--out", str(d / "data/s.csv"), "--n-samples", "60",
                     "--cube-out", str(d / "data/cube"), "--width", "20", "--height", "40"]) == 0
    return d


def _error(capsys):
    lines = [l for l in capsys.readouterr().err.splitlines() if l.startswith("{")]
    return json.loads(lines[-1])


def test_train_writes_model_and_manifest(workspace):
    out = workspace / "train/m.json"
    rc = dispatch(["train", "--samples", str(workspace / "data/s.csv"), "--algo", "gbm",
                   "--features", "eleven", "--out", str(out)] + FAST)
    assert rc == 0 and out.exists()
    manifest = json.loads((workspace / "train" / MANIFEST_NAME).read_text())
    assert manifest["command"] == "train" and manifest["seed"] == 42
    assert manifest["inputs"][str(workspace / "data/s.csv")] == _sha(workspace / "data/s.csv")
    assert {"flags", "tool_version", "timestamp"} <= manifest.keys()
    assert json.loads(out.read_text())["band_config"]["nir_nm"] == 800.0


def test_unknown_flag_exit_1(capsys):
    assert dispatch(["train", "--bogus"]) == 1
    err = capsys.readouterr().err
    assert "usage:" in err and '"UsageError"' in err


def test_eval_too_few_samples(tmp_path, capsys):
    assert dispatch(["synth", "--out", str(tmp_path / "s.csv"), "--n-samples", "10"]) == 0
    rc = dispatch(["eval", "--samples", str(tmp_path / "s.csv"), "--out-prefix", str(tmp_path / "r")])
    assert rc == 1 and _error(capsys)["error"] == "InsufficientData"


def test_missing_input_exit_2(tmp_path, capsys):
    rc = dispatch(["train", "--samples", str(tmp_path / "none.csv"), "--out", str(tmp_path / "m.json")])
    assert rc == 2 and _error(capsys)["error"] == "IoFailure"


def test_bad_band_is_validation_error(workspace, tmp_path, capsys):
    rc = dispatch(["index", "--samples", str(workspace / "data/s.csv"), "--out", str(tmp_path / "i.csv"),
                   "--nir", "1090"])
    assert rc == 1 and _error(capsys)["error"] == "NoBandInTolerance"


def test_index_columns(workspace, tmp_path):
    out = tmp_path / "idx.csv"
    assert dispatch(["index", "--samples", str(workspace / "data/s.csv"), "--features", "three",
                     "--out", str(out), "--correlation", str(tmp_path / "corr.csv")]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "id,nir1,red_blue,water_band" and len(lines) == 61
    assert (tmp_path / "corr.csv").read_text().splitlines()[0] == ",nir1,red_blue,water_band"


@pytest.mark.parametrize("cmd", ["synth", "train", "eval"])
def test_same_seed_same_bytes(tmp_path, workspace, cmd):
    samples = str(workspace / "data/s.csv")
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        if cmd == "synth":
            args = ["synth", "--out", str(d / "s.csv"), "--n-samples", "40", "--seed", "9",
                    "--cube-out", str(d / "c"), "--width", "8", "--height", "8"]
            files = ["s.csv", "c.img", "c.hdr", "c_truth.img"]
        elif cmd == "train":
            args = ["train", "--samples", samples, "--algo", "stacked", "--out", str(d / "m.json"),
                    "--seed", "3"] + FAST
            files = ["m.json"]
        else:
            args = ["eval", "--samples", samples, "--folds", "3", "--seed", "3",
                    "--out-prefix", str(d / "rep")] + FAST
            files = ["rep.csv", "rep.txt"]
        assert dispatch(args) == 0
        outputs.append([(d / f).read_bytes() for f in files])
    assert outputs[0] == outputs[1]


def test_predict_render_summarize(workspace, tmp_path):
    model = workspace / "train/m.json"
    if not model.exists():
        dispatch(["train", "--samples", str(workspace / "data/s.csv"), "--out", str(model)] + FAST)
    cube = workspace / "data/cube.hdr"
    before = _sha(workspace / "data/cube.img")
    maps = {}
    for threads in (1, 4):
        prefix = tmp_path / f"t{threads}/map"
        assert dispatch(["predict", "--cube", str(cube), "--model", str(model), "--out-prefix", str(prefix),
                         "--block-size", "10", "--threads", str(threads), "--render", "--das", "36"]) == 0
        maps[threads] = [(prefix.parent / f"map{s}").read_bytes()
                         for s in ("_lwc.img", "_mask.img", "_blocks.csv", "_lwc.ppm", "_stress.ppm")]
        assert len(list(prefix.parent.glob(MANIFEST_NAME))) == 1
    assert maps[1] == maps[4]
    assert _sha(workspace / "data/cube.img") == before
    summary = json.loads((tmp_path / "t1/map_summary.json").read_text())
    assert summary["das"] == 36 and summary["n_pixels"] == 800

    prefix = tmp_path / "t1/map"
    assert dispatch(["render", "--lwc", f"{prefix}_lwc.hdr", "--mask", f"{prefix}_mask.hdr", "--mode", "stress",
                     "--out", str(tmp_path / "r/s.ppm")]) == 0
    assert (tmp_path / "r/s.ppm").read_bytes() == (tmp_path / "t1/map_stress.ppm").read_bytes()

    ref = tmp_path / "ref.csv"
    ref.write_text("block_row,block_col,lwc\n" + "".join(f"{i},{j},{0.7 + 0.05 * (i + j)}\n"
                                                           for i in range(4) for j in range(2)))
    assert dispatch(["summarize", "--lwc", f"{prefix}_lwc.hdr", "--mask", f"{prefix}_mask.hdr",
                     "--block-size", "10", "--reference", str(ref), "--out", str(tmp_path / "q/b.csv")]) == 0
    assert (tmp_path / "q/b.csv").read_text() == (tmp_path / "t1/map_blocks.csv").read_text()
    doc = json.loads((tmp_path / "q/b_comparison.json").read_text())
    assert doc["n_blocks"] >= 2 and doc["rmse"] >= 0


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "leafwater", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("leafwater ")
