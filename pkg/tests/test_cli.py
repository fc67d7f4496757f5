import csv

import numpy as np
import pytest

from snpformer.cli import main
from snpformer.pipeline.checkpoint import load_checkpoint

TRAIN_ARGS = ["--k", "3", "--epochs", "2", "--patience", "1", "--lr", "1e-3", "--d-model", "8", "--layers", "1",
              "--heads", "2", "--head-hidden", "8", "--d-proj", "2"]


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    prefix = out / "toy"
    assert main(["synth", "--n", "25", "--len", "36", "--causal", "2", "--motif-len", "3", "--seed", "4",
                 "--out-prefix", str(prefix)]) == 0
    return out, prefix


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_synth_outputs(synth_files):
    _, prefix = synth_files
    pheno = read_csv(f"{prefix}.pheno.csv")
    oracle = read_csv(f"{prefix}.oracle.csv")
    assert [r["value"] for r in pheno] == [r["latent"] for r in oracle]  # noise 0
    assert "command=synth" in open(f"{prefix}.manifest").read()


def test_tokenize(synth_files, tmp_path):
    _, prefix = synth_files
    out = tmp_path / "tok.txt"
    assert main(["tokenize", "--sequences", f"{prefix}.seq.tsv", "--k", "3", "--out", str(out)]) == 0
    first = out.read_text().splitlines()[0].split("\t")
    assert first[0] == "s00" and len(first[1].split()) == 12
    assert (tmp_path / "tok.txt.manifest").exists()


def test_cv_predict_and_reproducibility(synth_files, tmp_path):
    _, prefix = synth_files
    data = ["--sequences", f"{prefix}.seq.tsv", "--phenotypes", f"{prefix}.pheno.csv", "--trait", "synthetic",
            "--task", "regression"]
    for run in ("a", "b"):
        assert main(["cv", *data, *TRAIN_ARGS, "--out-dir", str(tmp_path / run)]) == 0
    for name in ["metrics.csv", "history.csv"] + [f"fold{i}.gsck" for i in range(5)]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    rows = read_csv(tmp_path / "a" / "metrics.csv")
    assert [r["fold"] for r in rows] == ["0", "1", "2", "3", "4", "mean", "std"]
    manifest = (tmp_path / "a" / "manifest.txt").read_text()
    assert "input.sequences.sha256=" in manifest and "fold_seeds=" in manifest

    pred = tmp_path / "pred.csv"
    assert main(["predict", "--checkpoint", str(tmp_path / "a" / "fold0.gsck"), "--sequences", f"{prefix}.seq.tsv",
                 "--out", str(pred)]) == 0
    rows = read_csv(pred)
    assert len(rows) == 25 and np.isfinite([float(r["prediction"]) for r in rows]).all()
    ckpt = load_checkpoint(tmp_path / "a" / "fold0.gsck")
    assert ckpt.model_config.k == 3


def test_predict_length_mismatch(synth_files, tmp_path, capsys):
    _, prefix = synth_files
    data = ["--sequences", f"{prefix}.seq.tsv", "--phenotypes", f"{prefix}.pheno.csv", "--trait", "synthetic",
            "--task", "regression"]
    assert main(["cv", *data, *TRAIN_ARGS, "--epochs", "1", "--patience", "0", "--out-dir", str(tmp_path)]) == 0
    short = tmp_path / "short.tsv"
    short.write_text("x\tATCGATCGA\n")
    assert main(["predict", "--checkpoint", str(tmp_path / "fold0.gsck"), "--sequences", str(short),
                 "--out", str(tmp_path / "p.csv")]) == 2
    err = capsys.readouterr().err
    assert "12 tokens" in err and "length 9" in err


def test_ablate_component_grid(synth_files, tmp_path):
    _, prefix = synth_files
    data = ["--sequences", f"{prefix}.seq.tsv", "--phenotypes", f"{prefix}.pheno.csv", "--trait", "synthetic",
            "--task", "regression"]
    assert main(["ablate", *data, *TRAIN_ARGS, "--epochs", "1", "--patience", "0", "--grid", "component",
                 "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "ablation.csv")
    assert [r["cell"] for r in rows] == ["-kmer -mask", "-kmer +mask", "+kmer -mask", "+kmer +mask"]
    assert [r["k"] for r in rows] == ["1", "1", "3", "3"]


def test_ridge_command(synth_files, tmp_path):
    _, prefix = synth_files
    assert main(["ridge", "--sequences", f"{prefix}.seq.tsv", "--phenotypes", f"{prefix}.pheno.csv", "--trait",
                 "synthetic", "--task", "regression", "--k", "3", "--out-dir", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "ridge_metrics.csv")) == 7


@pytest.mark.parametrize("argv", [
    ["tokenize", "--sequences", "missing.tsv", "--out", "x"],
    ["predict", "--checkpoint", "missing.gsck", "--sequences", "s", "--out", "o"],
])
def test_user_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_bad_k_exit_2(synth_files, tmp_path):
    _, prefix = synth_files
    assert main(["tokenize", "--sequences", f"{prefix}.seq.tsv", "--k", "0", "--out", str(tmp_path / "t")]) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["cv"])
    assert err.value.code == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_failure_exit_3(synth_files, tmp_path):
    _, prefix = synth_files
    data = ["--sequences", f"{prefix}.seq.tsv", "--phenotypes", f"{prefix}.pheno.csv", "--trait", "synthetic",
            "--task", "regression"]
    argv = ["cv", *data, *TRAIN_ARGS, "--lr", "1e30", "--weight-decay", "0", "--checked", "--out-dir", str(tmp_path)]
    assert main(argv) == 3
