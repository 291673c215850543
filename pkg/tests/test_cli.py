import json

import numpy as np
import pandas as pd
import pytest

from finlex.cli import BUNDLED_PANEL, run
from finlex.config import ConfigError, load_config
from finlex.panelreg import fit_panel


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_config_defaults_and_overrides(tmp_path):
    cfg = load_config(write(tmp_path / "c.yaml", "embeddings:\n  dim: 50\nadapt:\n  theta: 0.7\n"))
    assert cfg["embeddings"]["dim"] == 50 and cfg["embeddings"]["window"] == 5
    assert cfg["adapt"]["theta"] == 0.7 and cfg["adapt"]["k_folds"] == 5


@pytest.mark.parametrize("text", [
    "embedings:\n  dim: 5\n",
    "embeddings:\n  dimm: 5\n",
    "embeddings:\n  dim: five\n",
    "adapt:\n  normalize: 1\n",
    "inputs:\n  lm_lexicons:\n    neg: {category: negative}\n",
])
def test_config_schema_errors(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path / "c.yaml", text))


def test_relative_paths_resolve_against_config(tmp_path):
    cfg = load_config(write(tmp_path / "c.yaml", "inputs:\n  corpus: data/c.jsonl\n"))
    assert cfg["inputs"]["corpus"] == str(tmp_path / "data" / "c.jsonl")


def test_analyze_overlap_identical(tmp_path):
    a = write(tmp_path / "a.txt", "loss\nclaim\n")
    b = write(tmp_path / "b.txt", "claim\nloss\n")
    out = tmp_path / "out"
    assert run(["analyze", "overlap", "--lexicons", str(a), str(b), "--out", str(out)]) == 0
    lines = (out / "overlap.tsv").read_text().splitlines()
    assert lines[2:4] == ["a\t100\t100", "b\t100\t100"]
    assert (out / "overlap.png").stat().st_size > 0
    manifest = json.loads((out / "manifests" / "analyze-overlap.json").read_text())
    assert manifest["tool"]["name"] == "finlex" and "overlap.tsv" in manifest["artifacts"]


def test_regress_bundled_panel(tmp_path):
    out = tmp_path / "out"
    rc = run(["regress", "--bundled", "--dependent", "y", "--regressors", "x1", "x2", "--controls", "x3",
              "--out", str(out)])
    assert rc == 0
    tsv = (out / "regress_y.tsv").read_text().splitlines()
    assert tsv[0].split("\t") == ["var", "coeff", "std coeff", "t", "R2"]
    df = pd.read_csv(BUNDLED_PANEL)
    oracle = fit_panel(df, "y", ["x1", "x2"], controls=df[["x3"]])
    row = tsv[1].split("\t")
    assert row[0] == "x1"
    assert row[1].rstrip("*") == format(oracle.coef[1], "#.3g")
    assert row[3] == f"{oracle.t[1]:.2f}"
    rec = json.loads((out / "regress_y.json").read_text())[0]
    assert np.isclose(rec["variables"]["x2"]["coef"], oracle.coef[2], rtol=1e-12)
    assert (out / "regress_y.png").exists()


def test_missing_input_names_stage(tmp_path, capsys):
    cfg = write(tmp_path / "c.yaml", "inputs:\n  corpus: nothere.jsonl\n")
    assert run(["ingest", "--config", str(cfg), "--out", str(tmp_path / "o")]) != 0
    assert "stage ingest" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path / "c.yaml", "bogus: 1\n")
    assert run(["analyze", "sizes", "--config", str(cfg), "--out", str(tmp_path / "o")]) != 0
    assert "ConfigError" in capsys.readouterr().err


def test_neighbors_missing_probe(tmp_path):
    from finlex.embeddings import EmbeddingModel, Vocab
    m = EmbeddingModel(Vocab.from_counts({"a": 2, "b": 1}, 1), np.eye(2))
    m.save(tmp_path / "m.npz")
    out = tmp_path / "o"
    assert run(["analyze", "neighbors", "--embeddings", str(tmp_path / "m.npz"), "--probes", "a", "zz",
                "--k", "1", "--out", str(out)]) == 0
    assert "missing:\n  zz" in (out / "neighbors.txt").read_text()


def test_small_pipeline_stages(tmp_path):
    demo = tmp_path / "demo"
    assert run(["make-synthetic", "--out", str(demo), "--tokens", "100000", "--firms", "10"]) == 0
    cfg = demo / "config.yaml"
    out = str(tmp_path / "out")
    common = ["--config", str(cfg), "--out", out, "--deterministic"]
    assert run(["ingest", *common]) == 0
    assert run(["train-embeddings", *common]) == 0
    assert run(["adapt", "add", "--only", "neg_lm", *common]) == 0
    assert run(["adapt", "re", "--only", "neg_lm", *common]) == 0
    lexdir = tmp_path / "out" / "lexicons"
    assert run(["adapt", "union", str(lexdir / "neg_RE.txt"), str(lexdir / "neg_ADD.txt"), *common]) == 0
    assert (lexdir / "neg_RE+ADD.txt").exists()
    assert run(["textvars", *common]) == 0
    panel = pd.read_csv(tmp_path / "out" / "text_panel.csv")
    assert {"neg_lm", "neg_ADD", "neg_RE", "neg_RE+ADD", "H4N_ORG"} <= set(panel.columns)
    assert run(["adapt", "add", "--only", "nope", *common]) != 0
