import hashlib
import json
from pathlib import Path

import pytest

from trolldet.cli import main
from trolldet.corpus import ingest, save_dataset

from conftest import tiny_corpus


def sha_map(root):
    return {p.relative_to(root): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in Path(root).rglob("*") if p.is_file()}


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    """Tiny corpus taken through ingest, featurize, and train once."""
    root = tmp_path_factory.mktemp("cli")
    accounts, tweets = tiny_corpus(root)
    paths = {
        "accounts": accounts,
        "tweets": tweets,
        "dataset": str(root / "dataset.bin"),
        "schema": str(root / "schema.json"),
        "vectors": str(root / "vectors.bin"),
        "bundle": str(root / "model.bundle"),
    }
    assert main(["ingest", "--accounts", accounts, "--tweets", tweets,
                 "--out", paths["dataset"]]) == 0
    assert main(["featurize", "--dataset", paths["dataset"],
                 "--schema-out", paths["schema"], "--vectors-out", paths["vectors"],
                 "--vocab-size", "60"]) == 0
    assert main(["train", "--dataset", paths["dataset"], "--out", paths["bundle"],
                 "--vocab-size", "60", "--max-iter", "200"]) == 0
    return paths


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "trolldet" in capsys.readouterr().out


def test_synth_writes_corpus(tmp_path, capsys):
    assert main(["synth", "--out-dir", str(tmp_path), "--controls", "8",
                 "--trolls", "3", "--seed", "1"]) == 0
    accounts = (tmp_path / "accounts.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(accounts) == 11
    labels = {json.loads(line)["label"] for line in accounts}
    assert labels == {"troll", "control"}
    assert (tmp_path / "tweets.jsonl").stat().st_size > 0
    assert "11 accounts" in capsys.readouterr().out


def test_synth_unlabeled_flag(tmp_path):
    assert main(["synth", "--out-dir", str(tmp_path), "--controls", "4",
                 "--trolls", "2", "--unlabeled"]) == 0
    labels = {json.loads(line)["label"]
              for line in (tmp_path / "accounts.jsonl").read_text().splitlines()}
    assert labels == {"unlabeled"}


def test_ingest_prints_summary(tmp_path, capsys):
    accounts, tweets = tiny_corpus(tmp_path)
    out = tmp_path / "ds.bin"
    assert main(["ingest", "--accounts", accounts, "--tweets", tweets,
                 "--out", str(out)]) == 0
    assert out.exists()
    output = capsys.readouterr().out
    assert f"wrote {out}" in output
    assert "Trolls" in output and "Controls" in output


def test_ingest_missing_file_exits_one(tmp_path, capsys):
    rc = main(["ingest", "--accounts", str(tmp_path / "nope.jsonl"),
               "--tweets", str(tmp_path / "also.jsonl"), "--out", str(tmp_path / "d.bin")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_featurize_artifacts(built):
    assert Path(built["schema"]).exists()
    assert Path(built["vectors"]).exists()


def test_cv_with_dataset_writes_csv(built, tmp_path, capsys):
    out = tmp_path / "cv.csv"
    assert main(["cv", "--dataset", built["dataset"], "--k", "2",
                 "--vocab-size", "60", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert any(line.startswith("fold,precision") for line in lines)
    assert lines[-1].startswith("mean,")
    assert "mean over 2 folds" in capsys.readouterr().out


def test_cv_resolves_dataset_from_vectors(built, capsys):
    assert main(["cv", "--vectors", built["vectors"], "--k", "2",
                 "--vocab-size", "60"]) == 0
    assert "mean over 2 folds" in capsys.readouterr().out


def test_cv_vectors_detect_changed_dataset(tmp_path, capsys):
    accounts, tweets = tiny_corpus(tmp_path)
    dataset = tmp_path / "ds.bin"
    vectors = tmp_path / "v.bin"
    assert main(["ingest", "--accounts", accounts, "--tweets", tweets,
                 "--out", str(dataset)]) == 0
    assert main(["featurize", "--dataset", str(dataset), "--vectors-out", str(vectors),
                 "--schema-out", str(tmp_path / "s.json"), "--vocab-size", "60"]) == 0
    save_dataset(ingest(accounts, tweets, cap=2), dataset)
    rc = main(["cv", "--vectors", str(vectors), "--k", "2", "--vocab-size", "60"])
    assert rc == 1
    assert "changed since" in capsys.readouterr().err


def test_cv_requires_dataset_or_vectors(capsys):
    assert main(["cv", "--k", "2"]) == 1
    assert "cv needs" in capsys.readouterr().err


def test_score_and_cohorts(built, tmp_path, capsys):
    predictions = tmp_path / "predictions.csv"
    assert main(["score", "--dataset", built["dataset"], "--model", built["bundle"],
                 "--out", str(predictions)]) == 0
    out = capsys.readouterr().out
    assert "Unique accounts scored: 8" in out
    lines = predictions.read_text(encoding="utf-8").splitlines()
    assert "account_id,probability,flagged" in lines
    assert sum(1 for l in lines if l and not l.startswith(("#", "account_id"))) == 8

    cohorts = tmp_path / "cohorts.md"
    assert main(["cohorts", "--dataset", built["dataset"],
                 "--predictions", str(predictions), "--out", str(cohorts)]) == 0
    text = cohorts.read_text(encoding="utf-8")
    assert "| # of Accounts |" in text
    assert "## Top hashtags" in text


def test_score_rejects_bad_threshold(built, tmp_path, capsys):
    rc = main(["score", "--dataset", built["dataset"], "--model", built["bundle"],
               "--threshold", "1.5", "--out", str(tmp_path / "p.csv")])
    assert rc == 1
    assert "threshold" in capsys.readouterr().err


def test_sage_prints_ranked_terms(built, capsys):
    assert main(["sage", "--dataset", built["dataset"], "--top", "5"]) == 0
    out = capsys.readouterr().out
    assert "rank,ngram,sage" in out
    assert "agitprop" in out


def test_sage_requires_corpora(capsys):
    assert main(["sage"]) == 1
    assert "sage needs" in capsys.readouterr().err


def test_agreement_command(tmp_path, capsys):
    ratings = tmp_path / "ratings.csv"
    ratings.write_text("account_id,rater_id,rating\n"
                       "a,r1,4\na,r2,4\nb,r1,2\nb,r2,2\n", encoding="utf-8")
    key = tmp_path / "key.csv"
    key.write_text("account_id,flagged\na,true\nb,false\n", encoding="utf-8")
    out = tmp_path / "agreement.md"
    assert main(["agreement", "--ratings", str(ratings), "--key", str(key),
                 "--out", str(out)]) == 0
    assert "alpha=1.0000" in capsys.readouterr().out
    assert "Krippendorff" in out.read_text(encoding="utf-8")


def run_args(out_dir, seed="7"):
    return ["run", "--synthetic", "--synth-controls", "25", "--synth-trolls", "6",
            "--k", "2", "--vocab-size", "60", "--seed", seed, "--out-dir", str(out_dir)]


def test_run_synthetic_pipeline(tmp_path, capsys):
    out_dir = tmp_path / "run"
    config = tmp_path / "pipeline.cfg"
    config.write_text("seed = 999   # overridden below\nmodel = lr\n", encoding="utf-8")
    assert main(run_args(out_dir) + ["--config", str(config)]) == 0
    manifest = json.loads((out_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["seed"] == 7
    assert manifest["config"]["synth_controls"] == 25
    for name in ("dataset.bin", "schema.json", "vectors.bin", "cv.csv",
                 "model.bundle", "predictions.csv", "cohorts.md"):
        assert name in manifest["artifacts"], name
        assert (out_dir / name).exists()
    for digest in manifest["artifacts"].values():
        assert len(digest) == 64 and int(digest, 16) >= 0
    assert "wrote" in capsys.readouterr().out


def test_run_repeats_byte_identical(tmp_path):
    out_dir = tmp_path / "run"
    assert main(run_args(out_dir)) == 0
    first = sha_map(out_dir)
    assert main(run_args(out_dir)) == 0
    assert sha_map(out_dir) == first


def test_run_seed_changes_artifacts(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(run_args(a, seed="7")) == 0
    assert main(run_args(b, seed="8")) == 0
    assert (a / "tweets.jsonl").read_bytes() != (b / "tweets.jsonl").read_bytes()


def test_run_rejects_unknown_config_key(tmp_path, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("verbosity = 3\n", encoding="utf-8")
    assert main(["run", "--config", str(config)]) == 1
    assert "unknown key 'verbosity'" in capsys.readouterr().err


def test_run_rejects_bad_config_value(tmp_path, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("k = soon\n", encoding="utf-8")
    assert main(["run", "--config", str(config)]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_run_without_corpus_exits_one(tmp_path, capsys):
    assert main(["run", "--out-dir", str(tmp_path / "o")]) == 1
    assert "no corpus" in capsys.readouterr().err


def test_run_missing_accounts_file_exits_one(tmp_path, capsys):
    rc = main(["run", "--out-dir", str(tmp_path / "o"),
               "--accounts", str(tmp_path / "missing.jsonl"),
               "--tweets", str(tmp_path / "missing2.jsonl")])
    assert rc == 1
    assert "stage 'ingest' failed" in capsys.readouterr().err
