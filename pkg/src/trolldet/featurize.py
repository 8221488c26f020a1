"""Feature extraction over capped timelines.

Five families, in fixed schema order: profile (5 columns), behavioral
(10), stop-word rates (179), language distribution (one column per
observed language, lexicographic), and bag-of-words counts over the top-k
unigrams and bigrams (vocabulary order).  Schemas are content-hashed;
anything consuming vectors checks the hash instead of trusting callers.

Per-timeline statistics are computed once and cached in TimelineStats so
cross-validation can re-derive vocabularies per training fold without
re-tokenizing the corpus.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import Dataset, Timeline, REFERENCE_DATE, URL_RE, age_in_days, format_timestamp, parse_timestamp
from .errors import SchemaMismatchError, ValidationError
from .hashing import canonical_json, content_hash, file_hash
from .stopwords import STOP_WORDS, STOP_WORD_SET, STOP_WORDS_SHA256

logger = logging.getLogger("trolldet.featurize")

DEFAULT_VOCAB_SIZE = 5000
SCHEMA_VERSION = 1

PROFILE_COLUMNS = (
    "profile:age_days",
    "profile:description_chars",
    "profile:followers",
    "profile:following",
    "profile:follower_following_ratio",
)

BEHAVIOR_COLUMNS = (
    "behavior:avg_hashtags",
    "behavior:avg_hashtag_chars",
    "behavior:avg_mentions",
    "behavior:avg_urls",
    "behavior:retweets_with_urls_rate",
    "behavior:tweets_with_urls_rate",
    "behavior:avg_tweets_per_day",
    "behavior:std_tweets_per_day",
    "behavior:retweet_rate",
    "behavior:avg_tweet_chars",
)

FAMILIES = ("profile", "behavior", "stopword", "language", "bow")

_FAMILY_PREFIX = {
    "profile": "profile:",
    "behavior": "behavior:",
    "stopword": "stopword:",
    "language": "lang:",
    "bow": "bow:",
}

_SPLIT_RE = re.compile(r"[^\w]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens: URLs removed, '#'/'@' markers deleted, then
    split on any non-alphanumeric run (underscore counts as a word char)."""
    text = URL_RE.sub(" ", text.lower())
    text = text.replace("#", "").replace("@", "")
    return [tok for tok in _SPLIT_RE.split(text) if tok]


def tweet_ngrams(tokens: Sequence[str]) -> list[str]:
    """Unigrams plus bigrams over adjacent kept tokens of a single tweet.

    Stop words are dropped first; bigrams pair tokens adjacent in the kept
    sequence, never across tweets.
    """
    kept = [tok for tok in tokens if tok not in STOP_WORD_SET]
    grams = list(kept)
    grams.extend(f"{a} {b}" for a, b in zip(kept, kept[1:]))
    return grams


@dataclass
class TimelineStats:
    """Schema-independent per-timeline aggregates, computed once."""

    account_id: str
    label: str
    profile: np.ndarray            # 5 values
    behavior: np.ndarray           # 10 values
    stop_rates: np.ndarray         # 179 values, stop-word hits / all tokens
    lang_fractions: dict[str, float]
    ngram_counts: Counter


def compute_stats(timeline: Timeline, reference_date: datetime = REFERENCE_DATE) -> TimelineStats:
    acct = timeline.account
    tweets = timeline.tweets
    n = len(tweets)

    following = acct.following_count if acct.following_count > 0 else 1
    profile = np.array([
        age_in_days(acct.created_at, reference_date),
        len(acct.description),
        acct.followers_count,
        acct.following_count,
        acct.followers_count / following,
    ], dtype=np.float64)

    stop_counts: Counter = Counter()
    ngram_counts: Counter = Counter()
    token_total = 0
    for tweet in tweets:
        tokens = tokenize(tweet.text)
        token_total += len(tokens)
        stop_counts.update(tok for tok in tokens if tok in STOP_WORD_SET)
        ngram_counts.update(tweet_ngrams(tokens))
    stop_rates = np.zeros(len(STOP_WORDS), dtype=np.float64)
    if token_total:
        for i, word in enumerate(STOP_WORDS):
            count = stop_counts.get(word)
            if count:
                stop_rates[i] = count / token_total

    if n:
        lang_counts = Counter(tweet.lang for tweet in tweets)
        lang_fractions = {code: count / n for code, count in lang_counts.items()}
        retweets = sum(1 for t in tweets if t.is_retweet)
        with_urls = sum(1 for t in tweets if t.urls)
        rts_with_urls = sum(1 for t in tweets if t.is_retweet and t.urls)
        avg_rate, std_rate = _daily_stats(tweets)
        behavior = np.array([
            sum(len(t.hashtags) for t in tweets) / n,
            sum(sum(len(h) for h in t.hashtags) for t in tweets) / n,
            sum(len(t.mentions) for t in tweets) / n,
            sum(len(t.urls) for t in tweets) / n,
            rts_with_urls / n,
            with_urls / n,
            avg_rate,
            std_rate,
            retweets / n,
            sum(len(t.text) for t in tweets) / n,
        ], dtype=np.float64)
    else:
        lang_fractions = {}
        behavior = np.zeros(len(BEHAVIOR_COLUMNS), dtype=np.float64)

    return TimelineStats(
        account_id=acct.id,
        label=acct.label,
        profile=profile,
        behavior=behavior,
        stop_rates=stop_rates,
        lang_fractions=lang_fractions,
        ngram_counts=ngram_counts,
    )


def _daily_stats(tweets) -> tuple[float, float]:
    """Mean and population std of tweets per calendar day (UTC), counting
    every day from the oldest to the newest tweet inclusive."""
    dates = [t.created_at.date() for t in tweets]
    first, last = min(dates), max(dates)
    span = (last - first).days + 1
    counts = np.zeros(span, dtype=np.float64)
    for d in dates:
        counts[(d - first).days] += 1
    return float(counts.mean()), float(counts.std())


# --- vocabulary ----------------------------------------------------------


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    freqs: tuple[int, ...]

    @property
    def hash(self) -> str:
        return content_hash({"terms": list(self.terms), "freqs": list(self.freqs)})


def build_vocabulary(stats: Iterable[TimelineStats], size: int = DEFAULT_VOCAB_SIZE) -> Vocabulary:
    """Top-`size` n-grams by corpus frequency, ties broken lexicographically."""
    if size <= 0:
        raise ValidationError("vocabulary size must be positive")
    totals: Counter = Counter()
    for st in stats:
        totals.update(st.ngram_counts)
    ranked = sorted(totals.items(), key=lambda item: (-item[1], item[0]))[:size]
    return Vocabulary(terms=tuple(t for t, _ in ranked), freqs=tuple(c for _, c in ranked))


def observed_languages(stats: Iterable[TimelineStats]) -> tuple[str, ...]:
    codes = set()
    for st in stats:
        codes.update(st.lang_fractions)
    return tuple(sorted(codes))


# --- schema ---------------------------------------------------------------


@dataclass(frozen=True)
class FeatureSchema:
    languages: tuple[str, ...]
    vocabulary: Vocabulary
    reference_date: datetime = REFERENCE_DATE
    version: int = SCHEMA_VERSION

    @property
    def columns(self) -> tuple[str, ...]:
        return (
            PROFILE_COLUMNS
            + BEHAVIOR_COLUMNS
            + tuple(f"stopword:{w}" for w in STOP_WORDS)
            + tuple(f"lang:{c}" for c in self.languages)
            + tuple(f"bow:{t}" for t in self.vocabulary.terms)
        )

    @property
    def hash(self) -> str:
        return content_hash({
            "version": self.version,
            "reference_date": format_timestamp(self.reference_date),
            "stopwords_sha256": STOP_WORDS_SHA256,
            "languages": list(self.languages),
            "vocab_terms": list(self.vocabulary.terms),
            "vocab_freqs": list(self.vocabulary.freqs),
        })

    def __len__(self) -> int:
        return (len(PROFILE_COLUMNS) + len(BEHAVIOR_COLUMNS) + len(STOP_WORDS)
                + len(self.languages) + len(self.vocabulary.terms))


def build_schema(stats: Sequence[TimelineStats], vocab_size: int = DEFAULT_VOCAB_SIZE,
                 reference_date: datetime = REFERENCE_DATE) -> FeatureSchema:
    return FeatureSchema(
        languages=observed_languages(stats),
        vocabulary=build_vocabulary(stats, vocab_size),
        reference_date=reference_date,
    )


def family_indices(schema: FeatureSchema, family: str) -> np.ndarray:
    """Column indices belonging to one feature family ('all' selects every
    column)."""
    columns = schema.columns
    if family == "all":
        return np.arange(len(columns))
    prefix = _FAMILY_PREFIX.get(family)
    if prefix is None:
        raise ValidationError(f"unknown feature family {family!r}; expected one of "
                              f"{('all',) + FAMILIES}")
    return np.array([i for i, c in enumerate(columns) if c.startswith(prefix)], dtype=int)


# --- assembly -------------------------------------------------------------


def assemble_from_stats(stats: TimelineStats, schema: FeatureSchema,
                        warn_unseen: bool = True) -> np.ndarray:
    """Dense feature row in schema order; languages absent from the schema
    are dropped (the schema is fixed at training time)."""
    lang_vec = np.zeros(len(schema.languages), dtype=np.float64)
    known = {code: i for i, code in enumerate(schema.languages)}
    dropped = []
    for code, frac in stats.lang_fractions.items():
        idx = known.get(code)
        if idx is None:
            dropped.append(code)
        else:
            lang_vec[idx] = frac
    if dropped and warn_unseen:
        logger.warning("account %s: language(s) %s not in schema; dropped",
                       stats.account_id, ",".join(sorted(dropped)))
    bow_vec = np.zeros(len(schema.vocabulary.terms), dtype=np.float64)
    counts = stats.ngram_counts
    for j, term in enumerate(schema.vocabulary.terms):
        c = counts.get(term)
        if c:
            bow_vec[j] = c
    return np.concatenate([stats.profile, stats.behavior, stats.stop_rates, lang_vec, bow_vec])


def assemble(timeline: Timeline, schema: FeatureSchema) -> np.ndarray:
    return assemble_from_stats(compute_stats(timeline, schema.reference_date), schema)


def assemble_matrix(stats_list: Sequence[TimelineStats], schema: FeatureSchema) -> np.ndarray:
    """Stack feature rows; unseen-language warnings are aggregated."""
    X = np.empty((len(stats_list), len(schema)), dtype=np.float64)
    dropped: set[str] = set()
    known = set(schema.languages)
    for i, st in enumerate(stats_list):
        X[i] = assemble_from_stats(st, schema, warn_unseen=False)
        dropped.update(code for code in st.lang_fractions if code not in known)
    if dropped:
        logger.warning("language(s) %s not in schema; dropped", ",".join(sorted(dropped)))
    return X


def featurize_dataset(dataset: Dataset, vocab_size: int = DEFAULT_VOCAB_SIZE,
                      reference_date: datetime = REFERENCE_DATE):
    """One-shot featurization: (stats, schema, ids, labels, X)."""
    stats = [compute_stats(tl, reference_date) for tl in dataset.timelines]
    schema = build_schema(stats, vocab_size, reference_date)
    ids = [st.account_id for st in stats]
    labels = [st.label for st in stats]
    X = assemble_matrix(stats, schema)
    return stats, schema, ids, labels, X


# --- persistence ----------------------------------------------------------


def schema_to_doc(schema: FeatureSchema, tool_version: str = "") -> dict:
    return {
        "artifact": "schema",
        "version": schema.version,
        "tool_version": tool_version,
        "reference_date": format_timestamp(schema.reference_date),
        "stopwords_sha256": STOP_WORDS_SHA256,
        "languages": list(schema.languages),
        "vocabulary": {"terms": list(schema.vocabulary.terms),
                       "freqs": list(schema.vocabulary.freqs)},
        "hash": schema.hash,
    }


def schema_from_doc(doc: dict, where: str = "schema") -> FeatureSchema:
    if doc.get("artifact") != "schema":
        raise ValidationError(f"{where}: not a schema artifact")
    if doc.get("stopwords_sha256") != STOP_WORDS_SHA256:
        raise SchemaMismatchError(f"{where}: stop-word list checksum differs from this build")
    schema = FeatureSchema(
        languages=tuple(doc["languages"]),
        vocabulary=Vocabulary(terms=tuple(doc["vocabulary"]["terms"]),
                              freqs=tuple(doc["vocabulary"]["freqs"])),
        reference_date=parse_timestamp(doc["reference_date"], where),
        version=doc["version"],
    )
    if doc.get("hash") != schema.hash:
        raise SchemaMismatchError(f"{where}: schema hash mismatch (file edited or version skew)")
    return schema


def save_schema(schema: FeatureSchema, path: str | Path, tool_version: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(schema_to_doc(schema, tool_version)) + "\n")


def load_schema(path: str | Path) -> FeatureSchema:
    with open(path, "r", encoding="utf-8") as fh:
        return schema_from_doc(json.load(fh), where=str(path))


def save_vectors(path: str | Path, schema: FeatureSchema, ids: Sequence[str],
                 labels: Sequence[str], X: np.ndarray, dataset_path: str | Path = "",
                 tool_version: str = "") -> None:
    """Row-per-account vector file; zeros are elided to keep BoW columns
    from bloating the artifact."""
    meta = {
        "artifact": "vectors",
        "version": 1,
        "tool_version": tool_version,
        "schema_hash": schema.hash,
        "columns": len(schema),
        "rows": len(ids),
        "dataset": {"path": str(dataset_path),
                    "sha256": file_hash(dataset_path) if dataset_path else ""},
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(meta) + "\n")
        for i, acct_id in enumerate(ids):
            row = X[i]
            nz = np.flatnonzero(row)
            fh.write(canonical_json({
                "account_id": acct_id,
                "label": labels[i],
                "nz": [[int(j), float(row[j])] for j in nz],
            }) + "\n")


def load_vectors(path: str | Path, schema: Optional[FeatureSchema] = None):
    """Returns (meta, ids, labels, X); verifies the schema hash if a schema
    is supplied."""
    with open(path, "r", encoding="utf-8") as fh:
        meta = json.loads(fh.readline())
        if meta.get("artifact") != "vectors":
            raise ValidationError(f"{path} is not a vectors artifact")
        if schema is not None and meta.get("schema_hash") != schema.hash:
            raise SchemaMismatchError(f"{path}: vectors were built under a different schema")
        ids, labels, rows = [], [], []
        ncol = meta["columns"]
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            vec = np.zeros(ncol, dtype=np.float64)
            for j, v in rec["nz"]:
                vec[j] = v
            ids.append(rec["account_id"])
            labels.append(rec["label"])
            rows.append(vec)
    X = np.vstack(rows) if rows else np.zeros((0, ncol), dtype=np.float64)
    return meta, ids, labels, X
