"""Command-line interface.

Each subcommand wraps one pipeline stage so stages can be rerun in
isolation; `run` chains them all.  Exit codes: 0 success, 1 bad input or
configuration, 2 unexpected failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .corpus import (convert_archive_csv, cyrillic_heuristic, dataset_summary, ingest,
                     load_dataset, parse_timestamp, render_summary, save_dataset)
from .errors import StageError, ValidationError
from .featurize import featurize_dataset, load_vectors, save_schema, save_vectors
from .hashing import file_hash
from .models import (cross_validate, flag_summary, load_bundle, load_predictions_csv,
                     render_cv_csv, render_flag_summary, render_predictions_csv, save_bundle,
                     score, train_bundle)
from .pipeline import PipelineConfig, apply_overrides, load_config, run_pipeline
from .review import (aggregate_ratings, cohort_compare, load_flag_key, load_ratings,
                     render_agreement_md, render_cohorts_md)
from .sage import count_ngrams, render_sage_csv, sage_fit, sage_report
from .synth import SyntheticSpec, generate_synthetic


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["lr", "dt", "ada"], default="lr")
    p.add_argument("--l2", type=float, default=1.0, help="ridge strength for lr")
    p.add_argument("--tol", type=float, default=1e-6, help="gradient sup-norm stop for lr")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--max-depth", type=int, default=10, help="depth cap for dt")
    p.add_argument("--rounds", type=int, default=50, help="boosting rounds for ada")
    p.add_argument("--base-depth", type=int, default=2, help="stump depth for ada")


def _model_params(args) -> dict:
    if args.model == "lr":
        return {"l2": args.l2, "tol": args.tol, "max_iter": args.max_iter}
    if args.model == "dt":
        return {"max_depth": args.max_depth}
    return {"rounds": args.rounds, "base_depth": args.base_depth}


def _ref_date(args):
    return parse_timestamp(args.ref_date, "--ref-date")


def cmd_synth(args) -> int:
    spec = SyntheticSpec(control_count=args.controls, troll_count=args.trolls)
    if args.null_signal:
        spec = spec.null_signal()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    accounts, tweets = out / "accounts.jsonl", out / "tweets.jsonl"
    n_acc, n_tw = generate_synthetic(spec, args.seed, accounts, tweets,
                                     labeled=not args.unlabeled)
    print(f"wrote {accounts} ({n_acc} accounts) and {tweets} ({n_tw} tweets)")
    return 0


def cmd_ingest(args) -> int:
    accounts_path, tweets_path = args.accounts, args.tweets
    if args.format == "archive-csv":
        out = Path(args.out)
        accounts_path = str(out) + ".accounts.jsonl"
        tweets_path = str(out) + ".tweets.jsonl"
        convert_archive_csv(args.accounts, args.tweets, accounts_path, tweets_path,
                            label=args.csv_label)
        print(f"converted archive CSVs to {accounts_path} and {tweets_path}")
    detector = cyrillic_heuristic if args.detect_lang else None
    dataset = ingest(accounts_path, tweets_path, cap=args.cap, detector=detector)
    save_dataset(dataset, args.out, tool_version=__version__)
    print(f"wrote {args.out}")
    if dataset.orphan_tweets:
        print(f"dropped {dataset.orphan_tweets} tweets with no matching account")
    print(render_summary(dataset_summary(dataset, _ref_date(args))))
    return 0


def cmd_featurize(args) -> int:
    dataset = load_dataset(args.dataset)
    stats, schema, ids, labels, X = featurize_dataset(dataset, args.vocab_size, _ref_date(args))
    save_schema(schema, args.schema_out, tool_version=__version__)
    save_vectors(args.vectors_out, schema, ids, labels, X,
                 dataset_path=args.dataset, tool_version=__version__)
    print(f"wrote {args.schema_out} ({len(schema)} columns) and {args.vectors_out} "
          f"({len(ids)} rows)")
    return 0


def _dataset_for_cv(args):
    if args.dataset:
        return load_dataset(args.dataset)
    if not args.vectors:
        raise ValidationError("cv needs --dataset or --vectors")
    # Vector files record which dataset they came from; folds must refit
    # the vocabulary on each training split, so the original data is required.
    meta, _, _, _ = load_vectors(args.vectors)
    source = meta.get("dataset", {})
    path = source.get("path", "")
    if not path or not Path(path).exists():
        raise ValidationError(f"{args.vectors}: source dataset {path!r} not found; "
                              "pass --dataset explicitly")
    if source.get("sha256") and file_hash(path) != source["sha256"]:
        raise ValidationError(f"{path} changed since {args.vectors} was written; "
                              "re-run featurize or pass --dataset")
    return load_dataset(path)


def cmd_cv(args) -> int:
    dataset = _dataset_for_cv(args)
    report = cross_validate(dataset, model=args.model, k=args.k, seed=args.seed,
                            family=args.family, vocab_size=args.vocab_size,
                            reference_date=_ref_date(args), threshold=args.threshold,
                            params=_model_params(args))
    text = render_cv_csv(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    m = report.mean
    print(f"mean over {args.k} folds: auc={m.auc:.4f} precision={m.precision:.4f} "
          f"recall={m.recall:.4f} f1={m.f1:.4f} accuracy={m.accuracy:.4f}")
    return 0


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    bundle = train_bundle(dataset, model=args.model, seed=args.seed, family=args.family,
                          vocab_size=args.vocab_size, reference_date=_ref_date(args),
                          params=_model_params(args))
    save_bundle(bundle, args.out, tool_version=__version__)
    print(f"wrote {args.out} ({args.model} on {bundle.metadata['train_rows']} accounts)")
    return 0


def cmd_score(args) -> int:
    dataset = load_dataset(args.dataset)
    bundle = load_bundle(args.model)
    predictions = score(dataset, bundle, threshold=args.threshold)
    Path(args.out).write_text(render_predictions_csv(predictions, args.threshold),
                              encoding="utf-8")
    print(f"wrote {args.out}")
    print(render_flag_summary(flag_summary(predictions)))
    return 0


def cmd_sage(args) -> int:
    if args.dataset:
        dataset = load_dataset(args.dataset)
        troll = [tl for tl in dataset.timelines if tl.account.label == "troll"]
        control = [tl for tl in dataset.timelines if tl.account.label == "control"]
        if not troll or not control:
            raise ValidationError("--dataset needs both troll and control accounts; "
                                  "otherwise pass --treatment and --base")
        treatment = count_ngrams(dataclasses.replace(dataset, timelines=troll))
        base = count_ngrams(dataclasses.replace(dataset, timelines=control))
    elif args.treatment and args.base:
        treatment = count_ngrams(load_dataset(args.treatment))
        base = count_ngrams(load_dataset(args.base))
    else:
        raise ValidationError("sage needs --dataset or both --treatment and --base")
    result = sage_fit(treatment, base)
    rows = sage_report(result, top_k=args.top)
    text = render_sage_csv(rows, meta=f"converged={result.converged} "
                                      f"iterations={result.iterations}")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_agreement(args) -> int:
    ratings = load_ratings(args.ratings)
    key = load_flag_key(args.key)
    report = aggregate_ratings(ratings, key)
    text = render_agreement_md(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    print(f"alpha={report.alpha:.4f} over {len(ratings)} rated accounts")
    return 0


def cmd_cohorts(args) -> int:
    dataset = load_dataset(args.dataset)
    predictions = load_predictions_csv(args.predictions)
    flags = {p.account_id: p.flagged for p in predictions}
    report = cohort_compare(dataset, flags, _ref_date(args))
    Path(args.out).write_text(render_cohorts_md(report), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def cmd_run(args) -> int:
    config = load_config(args.config) if args.config else PipelineConfig()
    overrides = {
        "seed": args.seed, "out_dir": args.out_dir, "synthetic": args.synthetic or None,
        "synth_controls": args.synth_controls, "synth_trolls": args.synth_trolls,
        "synth_null": args.synth_null or None, "accounts": args.accounts,
        "tweets": args.tweets, "score_accounts": args.score_accounts,
        "score_tweets": args.score_tweets, "model": args.model, "k": args.k,
        "family": args.family, "vocab_size": args.vocab_size, "cap": args.cap,
        "threshold": args.threshold, "reference_date": args.reference_date,
        "detect_lang": args.detect_lang or None,
    }
    manifest = run_pipeline(apply_overrides(config, overrides))
    for name in sorted(manifest["artifacts"]):
        print(f"wrote {Path(manifest['config']['out_dir']) / name}")
    for note in manifest["notes"]:
        print(note)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trolldet",
                                     description="troll account detection toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--out-dir", default="out")
    p.add_argument("--controls", type=int, default=5000)
    p.add_argument("--trolls", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--null-signal", action="store_true",
                   help="make troll accounts statistically identical to controls")
    p.add_argument("--unlabeled", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="build capped timelines from account/tweet files")
    p.add_argument("--accounts", required=True)
    p.add_argument("--tweets", required=True)
    p.add_argument("--out", default="dataset.bin")
    p.add_argument("--cap", type=int, default=200)
    p.add_argument("--format", choices=["jsonl", "archive-csv"], default="jsonl")
    p.add_argument("--csv-label", default="troll",
                   help="label stamped on accounts from an archive CSV")
    p.add_argument("--detect-lang", action="store_true",
                   help="fill missing tweet languages with a script heuristic")
    p.add_argument("--ref-date", default="2019-01-01")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="compute feature schema and vectors")
    p.add_argument("--dataset", required=True)
    p.add_argument("--schema-out", default="schema.json")
    p.add_argument("--vectors-out", default="vectors.bin")
    p.add_argument("--vocab-size", type=int, default=5000)
    p.add_argument("--ref-date", default="2019-01-01")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    p.add_argument("--dataset")
    p.add_argument("--vectors", help="vector file whose source dataset will be used")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", default="all",
                   choices=["all", "profile", "behavior", "stopword", "language", "bow"])
    p.add_argument("--vocab-size", type=int, default=5000)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--ref-date", default="2019-01-01")
    p.add_argument("--out")
    _add_model_args(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("train", help="fit a model on a full labeled dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default="model.bundle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", default="all",
                   choices=["all", "profile", "behavior", "stopword", "language", "bow"])
    p.add_argument("--vocab-size", type=int, default=5000)
    p.add_argument("--ref-date", default="2019-01-01")
    _add_model_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score a dataset with a trained bundle")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model", required=True, help="path to a model bundle")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", default="predictions.csv")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sage", help="contrastive keyword analysis between corpora")
    p.add_argument("--dataset", help="labeled dataset; compares troll vs control")
    p.add_argument("--treatment", help="dataset supplying treatment counts")
    p.add_argument("--base", help="dataset supplying background counts")
    p.add_argument("--top", type=int, default=30)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sage)

    p = sub.add_parser("agreement", help="inter-rater agreement on review ratings")
    p.add_argument("--ratings", required=True, help="CSV of account_id,rater_id,rating")
    p.add_argument("--key", required=True, help="review key CSV of account_id,flagged")
    p.add_argument("--out")
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("cohorts", help="compare flagged vs unflagged account cohorts")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", default="cohorts.md")
    p.add_argument("--ref-date", default="2019-01-01")
    p.set_defaults(func=cmd_cohorts)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--synthetic", action="store_true")
    p.add_argument("--synth-controls", type=int)
    p.add_argument("--synth-trolls", type=int)
    p.add_argument("--synth-null", action="store_true")
    p.add_argument("--accounts")
    p.add_argument("--tweets")
    p.add_argument("--score-accounts")
    p.add_argument("--score-tweets")
    p.add_argument("--model", choices=["lr", "dt", "ada"])
    p.add_argument("--k", type=int)
    p.add_argument("--family",
                   choices=["all", "profile", "behavior", "stopword", "language", "bow"])
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--reference-date")
    p.add_argument("--detect-lang", action="store_true")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, (ValidationError, OSError)) else 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
