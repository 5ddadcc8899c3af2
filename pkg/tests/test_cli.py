import csv
import json

import numpy as np
import pytest

from vit1d.cli import main
from vit1d.tensorio import read_matrix


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "c.json").write_text(json.dumps({"train": {"batch_pairs": 2, "epochs": 1, "checkpoint_every": 0}}))
    assert main(["synth", "--kind", "click-train", "--tracks", "5", "--duration", "9", "--seed", "1",
                 "--out", str(root / "corpus")]) == 0
    assert main(["pretrain", "--config", str(root / "c.json"), "--manifest", str(root / "corpus" / "manifest.jsonl"),
                 "--out", str(root / "run")]) == 0
    return root


def test_print_defaults(capsys):
    assert main(["--print-defaults"]) == 0
    assert json.loads(capsys.readouterr().out)["train"]["final_lr"] == 5e-7


def test_usage_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["bogus"]) == 2
    assert main(["pretrain", "--manifest", "x"]) == 2
    (tmp_path / "bad.json").write_text('{"nope": {}}')
    assert main(["synth", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 2


def test_synth_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["synth", "--kind", "click-train", "--tracks", "3", "--duration", "8", "--seed", "1",
                     "--out", str(tmp_path / d)]) == 0
    for f in (tmp_path / "a").rglob("*"):
        # the run record differs only in the --out argument
        if f.is_file() and f.name != "run.json":
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()


def test_pretrain_outputs(pipeline):
    run = pipeline / "run"
    for sub in ("checkpoints", "features", "metrics", "figures", "logs"):
        assert (run / sub).is_dir()
    rows = list(csv.reader((run / "loss.csv").open()))
    assert rows[0] == ["step", "lr", "loss"] and len(rows) == 3
    record = json.loads((run / "logs" / "run.json").read_text())
    assert record["command"] == "pretrain" and record["config"]["train"]["batch_pairs"] == 2
    assert "version" in record and record["seed"] == 0


def test_missing_checkpoint_creates_nothing(pipeline, tmp_path):
    out = tmp_path / "never"
    code = main(["attn", "--checkpoint", str(tmp_path / "nope"), "--audio",
                 str(pipeline / "corpus" / "audio" / "click0000.wav"), "--layer", "9", "--head", "0",
                 "--out", str(out)])
    assert code == 2 and not out.exists()
    code = main(["extract", "--checkpoint", str(tmp_path / "nope"), "--manifest",
                 str(pipeline / "corpus" / "manifest.jsonl"), "--mode", "cls", "--out", str(out)])
    assert code == 2 and not out.exists()


def test_runtime_failure_exits_one(pipeline, tmp_path):
    (tmp_path / "m.jsonl").write_text('{"id": "x", "audio_path": "missing.wav", "split": "train"}\n')
    assert main(["pretrain", "--manifest", str(tmp_path / "m.jsonl"), "--out", str(tmp_path / "o")]) == 1


def test_extract_probe_eval_beat(pipeline, capsys):
    ck = str(pipeline / "run" / "checkpoints" / "final")
    feats, probe = pipeline / "feat", pipeline / "probe"
    assert main(["extract", "--checkpoint", ck, "--manifest", str(pipeline / "corpus" / "manifest.jsonl"),
                 "--mode", "seq", "--out", str(feats)]) == 0
    values, head = read_matrix(feats / "features" / "click0000.mat")
    assert values.shape == (252, 192) and head["windows"] == 2 and head["frame_rate"] == 31.5
    assert head["split"] == "train" and head["dim"] == 192
    assert main(["probe", "--task", "beat", "--features", str(feats), "--labels",
                 str(pipeline / "corpus" / "labels"), "--out", str(probe)]) == 0
    assert (probe / "checkpoints" / "probe-beat" / "manifest.json").is_file()
    summary = json.loads((probe / "metrics" / "probe-beat.json").read_text())
    assert 0.0 <= summary["best_valid_metric"] <= 1.0
    capsys.readouterr()
    assert main(["eval", "--task", "beat", "--pred", str(probe / "predictions"), "--ref",
                 str(pipeline / "corpus" / "labels"), "--out", str(probe / "metrics" / "eval.json")]) == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["tracks"] == 5 and 0 <= metrics["f_measure"] <= 1


def test_extract_stack_width(pipeline):
    ck = str(pipeline / "run" / "checkpoints" / "final")
    out = pipeline / "stack"
    assert main(["extract", "--checkpoint", ck, "--manifest", str(pipeline / "corpus" / "manifest.jsonl"),
                 "--mode", "stack", "--pooled", "--out", str(out)]) == 0
    values, head = read_matrix(out / "features" / "click0001.mat")
    assert values.shape == (2, 768) and head["dim"] == 768 and head["granularity"] == "global"


def test_attn_outputs(pipeline):
    out = pipeline / "attn"
    assert main(["attn", "--checkpoint", str(pipeline / "run" / "checkpoints" / "final"), "--audio",
                 str(pipeline / "corpus" / "audio" / "click0000.wav"), "--layer", "9", "--head", "0",
                 "--out", str(out)]) == 0
    attn, _ = read_matrix(out / "features" / "attention_L9_H0.mat")
    assert attn.shape == (127, 127) and np.allclose(attn.sum(axis=1), 1, atol=1e-6)
    rows = list(csv.reader((out / "metrics" / "activation_L9_H0.csv").open()))
    assert rows[0] == ["time", "activation"] and len(rows) == 1 + 2 * 126
    assert (out / "figures" / "attention_L9_H0.pgm").read_bytes().startswith(b"P5")
    times = np.loadtxt(out / "metrics" / "onsets_L9_H0.txt", ndmin=1)
    assert np.all(np.diff(times) > 0)


def test_ssm_random_init(pipeline):
    out = pipeline / "ssm"
    assert main(["ssm", "--random-init", "--seed", "2", "--audio",
                 str(pipeline / "corpus" / "audio" / "click0002.wav"), "--layers", "3,12", "--out", str(out)]) == 0
    s, head = read_matrix(out / "features" / "ssm_random_L3.mat")
    assert s.shape == (126, 126) and np.allclose(s, s.T, atol=1e-6) and head["layer"] == 3
    assert (out / "figures" / "ssm_random_L12.svg").is_file()


def test_onsets_sweep_table(pipeline):
    out = pipeline / "onsets"
    assert main(["onsets", "--checkpoint", str(pipeline / "run" / "checkpoints" / "final"), "--manifest",
                 str(pipeline / "corpus" / "manifest.jsonl"), "--labels", str(pipeline / "corpus" / "labels"),
                 "--sweep", "--split", "valid", "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "metrics" / "onsets_sweep.csv").open()))
    assert len(rows) == 36
    assert {(int(r["layer"]), int(r["head"])) for r in rows} == {(k, h) for k in range(1, 13) for h in range(3)}


def test_onsets_flux(pipeline, capsys):
    out = pipeline / "flux"
    assert main(["onsets", "--method", "flux", "--manifest", str(pipeline / "corpus" / "manifest.jsonl"),
                 "--labels", str(pipeline / "corpus" / "labels"), "--out", str(out)]) == 0
    summary = json.loads((out / "metrics" / "onsets.json").read_text())
    assert summary["f_measure"] >= 0.9


def test_render_command(pipeline, tmp_path):
    from vit1d.tensorio import write_matrix

    write_matrix(tmp_path / "m.mat", np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert main(["render", "--matrix", str(tmp_path / "m.mat"), "--out", str(tmp_path / "m.pgm")]) == 0
    assert (tmp_path / "m.pgm").read_bytes().endswith(bytes([0, 255, 255, 0]))
    assert main(["render", "--matrix", str(tmp_path / "none.mat"), "--out", str(tmp_path / "x.pgm")]) == 2


def test_eval_key_chord_tagging(tmp_path, capsys):
    pred, ref = tmp_path / "pred", tmp_path / "ref"
    pred.mkdir()
    ref.mkdir()
    (ref / "a.key").write_text("C major\n")
    (pred / "a.key").write_text("G major\n")
    (ref / "a.lab").write_text("0 1 C:maj\n1 2 D:sus4\n")
    (pred / "a.lab").write_text("0 2 C:maj\n")
    (ref / "a.tags").write_text("rock\n")
    (ref / "b.tags").write_text("jazz\n")
    (pred / "a.tagscores").write_text("jazz 0.1\nrock 0.9\n")
    (pred / "b.tagscores").write_text("jazz 0.8\nrock 0.3\n")
    for task, key, value in (("key", "weighted_accuracy", 0.5), ("chord", "frame_accuracy", 1.0),
                             ("tagging", "roc_auc", 1.0)):
        capsys.readouterr()
        assert main(["eval", "--task", task, "--pred", str(pred), "--ref", str(ref)]) == 0
        assert json.loads(capsys.readouterr().out)[key] == value
    assert main(["eval", "--task", "key", "--pred", str(tmp_path / "none"), "--ref", str(ref)]) == 2
