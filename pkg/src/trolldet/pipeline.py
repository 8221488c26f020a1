"""End-to-end batch pipeline and its configuration.

Stages communicate only through files in the output directory, so any
intermediate can be deleted and regenerated.  One master seed feeds every
randomized stage through name-keyed derivation; rerunning with the same
config and seed rewrites every artifact byte for byte.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .corpus import (cyrillic_heuristic, dataset_summary, ingest, load_dataset,
                     parse_timestamp, render_summary, save_dataset)
from .errors import StageError, ValidationError
from .featurize import featurize_dataset, save_schema, save_vectors
from .hashing import content_hash, file_hash, split_seed
from .models import (cross_validate_stats, flag_summary, render_cv_csv, render_flag_summary,
                     render_predictions_csv, save_bundle, score, train_bundle)
from .review import sample_for_review, write_review_files
from .sage import count_ngrams, render_sage_csv, sage_fit, sage_report
from .synth import SyntheticSpec, generate_synthetic

CONFIG_FIELDS: dict[str, tuple[type, object]] = {
    "seed": (int, 0),
    "out_dir": (str, "out"),
    "accounts": (str, ""),
    "tweets": (str, ""),
    "score_accounts": (str, ""),
    "score_tweets": (str, ""),
    "cap": (int, 200),
    "vocab_size": (int, 5000),
    "reference_date": (str, "2019-01-01"),
    "model": (str, "lr"),
    "k": (int, 10),
    "family": (str, "all"),
    "threshold": (float, 0.5),
    "l2": (float, 1.0),
    "tol": (float, 1e-6),
    "max_iter": (int, 500),
    "rounds": (int, 50),
    "base_depth": (int, 2),
    "max_depth": (int, 10),
    "sage_top": (int, 30),
    "review_n": (int, 50),
    "detect_lang": (bool, False),
    "synthetic": (bool, False),
    "synth_controls": (int, 5000),
    "synth_trolls": (int, 100),
    "synth_null": (bool, False),
}


@dataclass
class PipelineConfig:
    seed: int = 0
    out_dir: str = "out"
    accounts: str = ""
    tweets: str = ""
    score_accounts: str = ""
    score_tweets: str = ""
    cap: int = 200
    vocab_size: int = 5000
    reference_date: str = "2019-01-01"
    model: str = "lr"
    k: int = 10
    family: str = "all"
    threshold: float = 0.5
    l2: float = 1.0
    tol: float = 1e-6
    max_iter: int = 500
    rounds: int = 50
    base_depth: int = 2
    max_depth: int = 10
    sage_top: int = 30
    review_n: int = 50
    detect_lang: bool = False
    synthetic: bool = False
    synth_controls: int = 5000
    synth_trolls: int = 100
    synth_null: bool = False

    def resolved(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def config_hash(self) -> str:
        return content_hash(self.resolved())

    def model_params(self) -> dict:
        if self.model == "lr":
            return {"l2": self.l2, "tol": self.tol, "max_iter": self.max_iter}
        if self.model == "dt":
            return {"max_depth": self.max_depth}
        if self.model == "ada":
            return {"rounds": self.rounds, "base_depth": self.base_depth}
        return {}


def _parse_value(key: str, raw: str, target: type):
    raw = raw.strip()
    if target is bool:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValidationError(f"config key {key!r}: cannot read {raw!r} as a boolean")
    try:
        return target(raw)
    except ValueError:
        raise ValidationError(f"config key {key!r}: cannot read {raw!r} as {target.__name__}") from None


def load_config(path: str | Path) -> PipelineConfig:
    """Simple key = value file; '#' starts a comment, unknown keys error."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"config line {lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_FIELDS:
                raise ValidationError(f"config line {lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, raw, CONFIG_FIELDS[key][0])
    return PipelineConfig(**values)


def apply_overrides(config: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Command-line values win over the config file."""
    clean = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in CONFIG_FIELDS:
            raise ValidationError(f"unknown config key {key!r}")
        clean[key] = value
    return dataclasses.replace(config, **clean)


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every applicable stage; returns the manifest dict.

    Stage errors abort the run and name the stage.  Scoring, cohort, and
    review stages run only when a scoring corpus is configured or
    generated.
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tool = __version__
    cfg_hash = config.config_hash
    reference = parse_timestamp(config.reference_date, "config reference_date")
    artifacts: dict[str, str] = {}
    notes: list[str] = []

    def record(name: str, path: Path):
        artifacts[name] = file_hash(path)

    accounts_path, tweets_path = config.accounts, config.tweets
    score_accounts, score_tweets = config.score_accounts, config.score_tweets

    # -- synth ------------------------------------------------------------
    if config.synthetic:
        try:
            spec = SyntheticSpec(control_count=config.synth_controls,
                                 troll_count=config.synth_trolls)
            if config.synth_null:
                spec = spec.null_signal()
            accounts_path = str(out / "accounts.jsonl")
            tweets_path = str(out / "tweets.jsonl")
            generate_synthetic(spec, split_seed(config.seed, "synth-train"),
                               accounts_path, tweets_path)
            score_accounts = str(out / "score_accounts.jsonl")
            score_tweets = str(out / "score_tweets.jsonl")
            generate_synthetic(spec, split_seed(config.seed, "synth-score"),
                               score_accounts, score_tweets, labeled=False)
            for name in ("accounts.jsonl", "tweets.jsonl", "score_accounts.jsonl",
                         "score_tweets.jsonl"):
                record(name, out / name)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("synth", exc) from exc
    elif not accounts_path or not tweets_path:
        raise StageError("ingest", ValidationError(
            "no corpus: set accounts/tweets paths or synthetic = true"))

    detector = cyrillic_heuristic if config.detect_lang else None

    # -- ingest -----------------------------------------------------------
    try:
        dataset = ingest(accounts_path, tweets_path, cap=config.cap, detector=detector)
        dataset_path = out / "dataset.bin"
        save_dataset(dataset, dataset_path, tool_version=tool)
        record("dataset.bin", dataset_path)
        summary_path = out / "summary.md"
        summary_path.write_text(render_summary(dataset_summary(dataset, reference)),
                                encoding="utf-8")
        record("summary.md", summary_path)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("ingest", exc) from exc

    # -- featurize ----------------------------------------------------------
    try:
        stats, schema, ids, labels, X = featurize_dataset(dataset, config.vocab_size, reference)
        schema_path = out / "schema.json"
        save_schema(schema, schema_path, tool_version=tool)
        record("schema.json", schema_path)
        vectors_path = out / "vectors.bin"
        save_vectors(vectors_path, schema, ids, labels, X,
                     dataset_path=dataset_path, tool_version=tool)
        record("vectors.bin", vectors_path)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("featurize", exc) from exc

    # -- cross-validation -----------------------------------------------------
    try:
        report = cross_validate_stats(stats, model=config.model, k=config.k,
                                      seed=split_seed(config.seed, "cv"),
                                      family=config.family, vocab_size=config.vocab_size,
                                      reference_date=reference, threshold=config.threshold,
                                      params=config.model_params())
        cv_path = out / "cv.csv"
        cv_path.write_text(render_cv_csv(report), encoding="utf-8")
        record("cv.csv", cv_path)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("cv", exc) from exc

    # -- train -------------------------------------------------------------
    try:
        bundle = train_bundle(dataset, model=config.model,
                              seed=split_seed(config.seed, "train"),
                              family=config.family, vocab_size=config.vocab_size,
                              reference_date=reference, params=config.model_params())
        bundle.metadata.update({"config_hash": cfg_hash,
                                "dataset_sha256": artifacts["dataset.bin"]})
        bundle_path = out / "model.bundle"
        save_bundle(bundle, bundle_path, tool_version=tool)
        record("model.bundle", bundle_path)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("train", exc) from exc

    # -- sage ---------------------------------------------------------------
    try:
        troll_tl = [tl for tl in dataset.timelines if tl.account.label == "troll"]
        control_tl = [tl for tl in dataset.timelines if tl.account.label == "control"]
        if troll_tl and control_tl:
            treatment = count_ngrams(dataclasses.replace(dataset, timelines=troll_tl))
            base = count_ngrams(dataclasses.replace(dataset, timelines=control_tl))
            result = sage_fit(treatment, base)
            rows = sage_report(result, top_k=config.sage_top)
            sage_path = out / "sage.csv"
            sage_path.write_text(render_sage_csv(
                rows, meta=f"config={cfg_hash} converged={result.converged} "
                           f"iterations={result.iterations}"), encoding="utf-8")
            record("sage.csv", sage_path)
        else:
            notes.append("sage skipped: need both troll and control timelines")
    except StageError:
        raise
    except Exception as exc:
        raise StageError("sage", exc) from exc

    # -- score / cohorts / review sample ----------------------------------------
    if score_accounts and score_tweets:
        try:
            new_dataset = ingest(score_accounts, score_tweets, cap=config.cap,
                                 detector=detector)
            new_path = out / "score_dataset.bin"
            save_dataset(new_dataset, new_path, tool_version=tool)
            record("score_dataset.bin", new_path)
            predictions = score(new_dataset, bundle, threshold=config.threshold)
            pred_path = out / "predictions.csv"
            pred_path.write_text(f"# config={cfg_hash} model={artifacts['model.bundle']}\n"
                                 + render_predictions_csv(predictions, config.threshold),
                                 encoding="utf-8")
            record("predictions.csv", pred_path)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("score", exc) from exc

        try:
            from .review import cohort_compare, render_cohorts_md

            flags = {p.account_id: p.flagged for p in predictions}
            cohorts = cohort_compare(new_dataset, flags, reference)
            cohorts_path = out / "cohorts.md"
            cohorts_path.write_text(
                render_flag_summary(flag_summary(predictions)) + "\n"
                + render_cohorts_md(cohorts), encoding="utf-8")
            record("cohorts.md", cohorts_path)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("cohorts", exc) from exc

        try:
            flagged_pool = sorted(p.account_id for p in predictions if p.flagged)
            unflagged_pool = sorted(p.account_id for p in predictions if not p.flagged)
            n = min(config.review_n, len(flagged_pool), len(unflagged_pool))
            if n >= 1:
                sample, key = sample_for_review(flagged_pool, unflagged_pool, n=n,
                                                seed=split_seed(config.seed, "review"))
                write_review_files(sample, key, out / "review_sample.csv",
                                   out / "review_key.csv")
                record("review_sample.csv", out / "review_sample.csv")
                record("review_key.csv", out / "review_key.csv")
            else:
                notes.append("review sample skipped: a cohort is empty")
        except StageError:
            raise
        except Exception as exc:
            raise StageError("review", exc) from exc

    manifest = {
        "tool_version": tool,
        "config": config.resolved(),
        "config_hash": cfg_hash,
        "artifacts": artifacts,
        "notes": notes,
    }
    from .hashing import canonical_json

    (out / "manifest.json").write_text(canonical_json(manifest) + "\n", encoding="utf-8")
    return manifest
