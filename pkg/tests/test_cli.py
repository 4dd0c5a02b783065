import json

import pytest

from ambivoice.cli import PipelineConfig, dispatch
from ambivoice.exceptions import InvalidArgument
from ambivoice.io import load_embeddings, load_generated

FAST = ["--nx", "48", "--ny", "48", "--n-per-gender", "40", "--dim", "8"]


def test_help_exits_zero(capsys):
    assert dispatch(["--help"]) == 0
    assert dispatch(["density", "--help"]) == 0
    assert "bandwidth" in capsys.readouterr().out


def test_usage_errors():
    assert dispatch([]) == 1
    assert dispatch(["frobnicate"]) == 1
    assert dispatch(["ridge", "--nx", "many"]) == 1
    assert dispatch(["generate", "--indices", "1,x"]) == 1


def test_synth_then_generate(tmp_path):
    out = tmp_path / "o"
    assert dispatch(["synth", "--out", str(out)] + FAST) == 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"embeddings": str(out / "embeddings.csv"), "nx": 48, "ny": 48, "out": str(out)}))
    assert dispatch(["generate", "--config", str(cfg)]) == 0
    ids = [v.voice_id for v in load_generated(out / "voices.jsonl")]
    assert ids == [0, 1, 3, 5, 7, 9, 11, 13, 15, 17, 19]
    assert len(load_embeddings(out / "embeddings.csv")) == 80


def test_flags_override_config(tmp_path):
    out = tmp_path / "o"
    assert dispatch(["synth", "--out", str(out)] + FAST) == 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"embeddings": str(out / "embeddings.csv"), "indices": [1, 3], "out": str(out)}))
    assert dispatch(["generate", "--config", str(cfg), "--indices", "2", "--nx", "32", "--ny", "32"]) == 0
    assert [v.voice_id for v in load_generated(out / "voices.jsonl")] == [0, 2, 12]


def test_one_gender_input_fails(tmp_path, capsys):
    path = tmp_path / "e.csv"
    path.write_text("speaker_id,gender,language,e0,e1\na,M,xx,0.1,0.2\nb,M,xx,0.3,0.1\nc,M,xx,0.0,0.5\n")
    assert dispatch(["analyze", "--embeddings", str(path), "--out", str(tmp_path)]) == 2
    assert "InsufficientData" in capsys.readouterr().err


def test_bad_values_are_data_errors(tmp_path):
    assert dispatch(["ridge", "--metric", "manhattan", "--out", str(tmp_path)]) == 2
    assert dispatch(["ridge", "--bandwidth", "-1", "--out", str(tmp_path)]) == 2
    assert dispatch(["analyze", "--embeddings", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2


def test_unknown_config_key():
    with pytest.raises(InvalidArgument):
        PipelineConfig.from_mapping({"bandwith": 0.1})


def test_pipeline_writes_everything(tmp_path):
    out = tmp_path / "o"
    assert dispatch(["pipeline", "--out", str(out)] + FAST) == 0
    names = {p.name for p in out.iterdir()}
    expected = {
        "embeddings.csv", "dvectors.jsonl", "eta_raw.csv", "eta_pca.csv", "pca_model.json", "grid.csv",
        "path.csv", "samples.csv", "voices.jsonl", "report.json", "consistency.csv", "speakers2d.csv",
        "voices2d.csv", "boundary.json", "dvectors2d.csv",
    }
    assert expected <= names
    report = json.loads((out / "report.json").read_text())
    assert [r["voice_id"] for r in report["voices"]] == [0, 1, 3, 5, 7, 9, 11, 13, 15, 17, 19]
    assert report["distances"]["embedding:zero_fill"]["n_pairs"] == 10
    assert (out / "grid.csv").read_text().splitlines()[0] == "x,y,pm,pf,pa"
    assert len((out / "grid.csv").read_text().splitlines()) == 48 * 48 + 1
