"""Corpus ingestion: accounts, tweets, capped timelines.

Input files are line-delimited JSON, one record per line.  Accounts carry
a label (troll / control / unlabeled); tweets reference accounts by id.
Entity fields (hashtags, mentions, urls) and the retweet flag are derived
from the text when absent, so the loader accepts both pre-extracted dumps
and raw text dumps.  Timelines keep only the newest `cap` tweets per
account, mirroring a collection pipeline that can fetch a bounded number
of statuses per account.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional

from .errors import ValidationError
from .hashing import canonical_json, file_hash

LABELS = ("troll", "control", "unlabeled")

# Default reference date for account-age style computations: the data
# release this pipeline was designed around ends in late 2018.
REFERENCE_DATE = datetime(2019, 1, 1, tzinfo=timezone.utc)

HASHTAG_RE = re.compile(r"#(\w+)")
MENTION_RE = re.compile(r"@(\w+)")
# a URL is a maximal non-whitespace run that starts with http(s)://
URL_RE = re.compile(r"(?<!\S)https?://\S+")
RETWEET_PREFIX = "RT @"

_CYRILLIC_RE = re.compile(r"[Ѐ-ӿ]")
_LETTER_RE = re.compile(r"[^\W\d_]", re.UNICODE)


def parse_timestamp(value: str, where: str = "timestamp") -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    if not isinstance(value, str) or not value:
        raise ValidationError(f"{where}: created_at must be an ISO-8601 string")
    text = value.replace("Z", "+00:00")
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise ValidationError(f"{where}: created_at {value!r} is not ISO-8601") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class Account:
    id: str
    screen_name: str
    created_at: datetime
    description: str
    followers_count: int
    following_count: int
    label: str

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "screen_name": self.screen_name,
            "created_at": format_timestamp(self.created_at),
            "description": self.description,
            "followers_count": self.followers_count,
            "following_count": self.following_count,
            "label": self.label,
        }


@dataclass
class Tweet:
    id: str
    account_id: str
    created_at: datetime
    text: str
    is_retweet: bool
    lang: str
    hashtags: list[str]
    mentions: list[str]
    urls: list[str]

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "account_id": self.account_id,
            "created_at": format_timestamp(self.created_at),
            "text": self.text,
            "is_retweet": self.is_retweet,
            "lang": self.lang,
            "hashtags": self.hashtags,
            "mentions": self.mentions,
            "urls": self.urls,
        }


@dataclass
class Timeline:
    account: Account
    tweets: list[Tweet]  # newest first, at most `cap` entries


@dataclass
class Dataset:
    timelines: list[Timeline]
    cap: int
    source: dict = field(default_factory=dict)
    ingested_at: Optional[datetime] = None
    orphan_tweets: int = 0

    def label_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for tl in self.timelines:
            counts[tl.account.label] = counts.get(tl.account.label, 0) + 1
        return counts

    def tweet_count(self) -> int:
        return sum(len(tl.tweets) for tl in self.timelines)


def extract_entities(text: str) -> tuple[list[str], list[str], list[str]]:
    """Pull (hashtags, mentions, urls) out of raw tweet text.

    Hashtags and mentions are maximal word-character runs introduced by
    '#'/'@' (the marker itself is not part of the entity); URLs are
    whitespace-delimited tokens starting with http:// or https://.  Each
    list preserves order of appearance.
    """
    urls = URL_RE.findall(text)
    # strip URLs first so '#'/'@' inside a link never count as entities
    stripped = URL_RE.sub(" ", text)
    hashtags = HASHTAG_RE.findall(stripped)
    mentions = MENTION_RE.findall(stripped)
    return hashtags, mentions, urls


# --- language detection -------------------------------------------------

# A detector maps tweet text to a language code.  The bundled heuristic is
# a deliberately crude stand-in (majority-Cyrillic -> "ru", else "en");
# swap in a real detector when classifying multilingual corpora.
LanguageDetector = Callable[[str], str]


def cyrillic_heuristic(text: str) -> str:
    letters = _LETTER_RE.findall(text)
    if not letters:
        return "und"
    cyr = len(_CYRILLIC_RE.findall(text))
    return "ru" if cyr * 2 > len(letters) else "en"


# --- loading ------------------------------------------------------------


def _iter_json_lines(path: str | Path, kind: str):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{kind} line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(record, dict):
                raise ValidationError(f"{kind} line {lineno}: record must be an object")
            yield lineno, record


def _require_str(record: dict, key: str, where: str, allow_empty: bool = False) -> str:
    value = record.get(key)
    if not isinstance(value, str) or (not allow_empty and not value):
        raise ValidationError(f"{where}: field {key!r} must be a non-empty string")
    return value


def _require_count(record: dict, key: str, where: str) -> int:
    value = record.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{where}: field {key!r} must be an integer")
    if value < 0:
        raise ValidationError(f"{where}: field {key!r} must be >= 0")
    return value


def account_from_record(record: dict, where: str) -> Account:
    label = record.get("label", "unlabeled")
    if label not in LABELS:
        raise ValidationError(f"{where}: field 'label' must be one of {LABELS}")
    return Account(
        id=_require_str(record, "id", where),
        screen_name=_require_str(record, "screen_name", where),
        created_at=parse_timestamp(record.get("created_at"), where),
        description=record.get("description", "") if isinstance(record.get("description", ""), str) else _bad(where, "description"),
        followers_count=_require_count(record, "followers_count", where),
        following_count=_require_count(record, "following_count", where),
        label=label,
    )


def _bad(where: str, key: str):
    raise ValidationError(f"{where}: field {key!r} must be a string")


def _entity_list(record: dict, key: str, where: str) -> Optional[list[str]]:
    if key not in record:
        return None
    value = record[key]
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        raise ValidationError(f"{where}: field {key!r} must be a list of strings")
    for v in value:
        if re.search(r"\s", v):
            raise ValidationError(f"{where}: field {key!r} entries may not contain whitespace")
    return value


def tweet_from_record(record: dict, where: str, detector: Optional[LanguageDetector] = None) -> Tweet:
    text = record.get("text")
    if not isinstance(text, str):
        raise ValidationError(f"{where}: field 'text' must be a string")
    hashtags = _entity_list(record, "hashtags", where)
    mentions = _entity_list(record, "mentions", where)
    urls = _entity_list(record, "urls", where)
    if hashtags is None or mentions is None or urls is None:
        d_tags, d_mentions, d_urls = extract_entities(text)
        hashtags = d_tags if hashtags is None else hashtags
        mentions = d_mentions if mentions is None else mentions
        urls = d_urls if urls is None else urls
    is_retweet = record.get("is_retweet")
    if is_retweet is None:
        is_retweet = text.startswith(RETWEET_PREFIX)
    elif not isinstance(is_retweet, bool):
        raise ValidationError(f"{where}: field 'is_retweet' must be a boolean")
    lang = record.get("lang")
    if lang is None:
        lang = detector(text) if detector is not None else "und"
    elif not isinstance(lang, str) or not lang:
        raise ValidationError(f"{where}: field 'lang' must be a non-empty string")
    return Tweet(
        id=_require_str(record, "id", where),
        account_id=_require_str(record, "account_id", where),
        created_at=parse_timestamp(record.get("created_at"), where),
        text=text,
        is_retweet=is_retweet,
        lang=lang,
        hashtags=hashtags,
        mentions=mentions,
        urls=urls,
    )


def load_accounts(path: str | Path) -> list[Account]:
    accounts = []
    seen: set[str] = set()
    for lineno, record in _iter_json_lines(path, "accounts"):
        account = account_from_record(record, f"accounts line {lineno}")
        if account.id in seen:
            raise ValidationError(f"accounts line {lineno}: duplicate account id {account.id!r}")
        seen.add(account.id)
        accounts.append(account)
    return accounts


def load_tweets(path: str | Path, detector: Optional[LanguageDetector] = None) -> list[Tweet]:
    tweets = []
    seen: set[str] = set()
    for lineno, record in _iter_json_lines(path, "tweets"):
        tweet = tweet_from_record(record, f"tweets line {lineno}", detector)
        if tweet.id in seen:
            raise ValidationError(f"tweets line {lineno}: duplicate tweet id {tweet.id!r}")
        seen.add(tweet.id)
        tweets.append(tweet)
    return tweets


# --- archive CSV converter ----------------------------------------------

# Column mapping for the public election-integrity CSV release.  Only the
# fields our record types name are carried over; everything else is
# dropped.  The release has no label column, so the caller supplies one.
_ARCHIVE_ACCOUNT_COLUMNS = {
    "userid": "id",
    "user_screen_name": "screen_name",
    "account_creation_date": "created_at",
    "user_profile_description": "description",
    "follower_count": "followers_count",
    "following_count": "following_count",
}

_ARCHIVE_TWEET_COLUMNS = {
    "tweetid": "id",
    "userid": "account_id",
    "tweet_time": "created_at",
    "tweet_text": "text",
    "tweet_language": "lang",
}


def _archive_list(raw: str) -> list[str]:
    raw = raw.strip()
    if not raw or raw == "[]":
        return []
    return [part.strip().strip("'\"") for part in raw.strip("[]").split(",") if part.strip().strip("'\"")]


def convert_archive_csv(accounts_csv: str | Path, tweets_csv: str | Path,
                        accounts_out: str | Path, tweets_out: str | Path,
                        label: str = "troll") -> None:
    """Rewrite the public CSV release as our line-delimited record files."""
    if label not in LABELS:
        raise ValidationError(f"label must be one of {LABELS}")
    with open(accounts_csv, newline="", encoding="utf-8") as fh, \
            open(accounts_out, "w", encoding="utf-8") as out:
        for row in csv.DictReader(fh):
            record = {ours: row.get(theirs, "") for theirs, ours in _ARCHIVE_ACCOUNT_COLUMNS.items()}
            for key in ("followers_count", "following_count"):
                try:
                    record[key] = int(float(record[key] or 0))
                except ValueError:
                    record[key] = 0
            record["created_at"] = _archive_timestamp(record["created_at"])
            record["label"] = label
            out.write(canonical_json(record) + "\n")
    with open(tweets_csv, newline="", encoding="utf-8") as fh, \
            open(tweets_out, "w", encoding="utf-8") as out:
        for row in csv.DictReader(fh):
            record = {ours: row.get(theirs, "") for theirs, ours in _ARCHIVE_TWEET_COLUMNS.items()}
            record["created_at"] = _archive_timestamp(record["created_at"])
            if not record.get("lang"):
                record.pop("lang", None)
            retweet = row.get("is_retweet", "")
            if retweet:
                record["is_retweet"] = retweet.strip().lower() in ("true", "1", "yes")
            for theirs, ours in (("hashtags", "hashtags"), ("urls", "urls"), ("user_mentions", "mentions")):
                if theirs in row:
                    record[ours] = _archive_list(row[theirs])
            out.write(canonical_json(record) + "\n")


def _archive_timestamp(raw: str) -> str:
    raw = raw.strip()
    if " " in raw and "T" not in raw:
        raw = raw.replace(" ", "T")
    if len(raw) == 10:
        raw += "T00:00:00"
    if len(raw) == 16:
        raw += ":00"
    return raw + ("" if raw.endswith("Z") or "+" in raw else "Z")


# --- timelines ----------------------------------------------------------


def build_timelines(accounts: Iterable[Account], tweets: Iterable[Tweet], cap: int = 200) -> Dataset:
    """Group tweets per account, newest first, keeping at most `cap` each.

    Tweets referencing unknown accounts are counted and dropped.  Accounts
    with no tweets keep an empty timeline so profile features still exist
    for them downstream.
    """
    if not isinstance(cap, int) or isinstance(cap, bool) or cap <= 0:
        raise ValidationError("cap must be a positive integer")
    accounts = list(accounts)
    by_account: dict[str, list[Tweet]] = {acct.id: [] for acct in accounts}
    if len(by_account) != len(accounts):
        raise ValidationError("duplicate account ids passed to build_timelines")
    orphans = 0
    latest: Optional[datetime] = None
    for tweet in tweets:
        if latest is None or tweet.created_at > latest:
            latest = tweet.created_at
        bucket = by_account.get(tweet.account_id)
        if bucket is None:
            orphans += 1
            continue
        bucket.append(tweet)
    timelines = []
    for acct in accounts:
        if latest is None or acct.created_at > latest:
            latest = acct.created_at
        ordered = sorted(by_account[acct.id], key=lambda t: (-t.created_at.timestamp(), t.id))
        timelines.append(Timeline(account=acct, tweets=ordered[:cap]))
    return Dataset(timelines=timelines, cap=cap, ingested_at=latest, orphan_tweets=orphans)


def ingest(accounts_path: str | Path, tweets_path: str | Path, cap: int = 200,
           detector: Optional[LanguageDetector] = None) -> Dataset:
    accounts = load_accounts(accounts_path)
    tweets = load_tweets(tweets_path, detector)
    dataset = build_timelines(accounts, tweets, cap)
    dataset.source = {
        "accounts_path": str(accounts_path),
        "tweets_path": str(tweets_path),
        "accounts_sha256": file_hash(accounts_path),
        "tweets_sha256": file_hash(tweets_path),
    }
    return dataset


# --- serialization ------------------------------------------------------

DATASET_FORMAT_VERSION = 1


def save_dataset(dataset: Dataset, path: str | Path, tool_version: str = "") -> None:
    """Write the canonical line-delimited form; identical datasets always
    produce identical bytes."""
    meta = {
        "artifact": "dataset",
        "version": DATASET_FORMAT_VERSION,
        "tool_version": tool_version,
        "cap": dataset.cap,
        "source": dataset.source,
        "ingested_at": format_timestamp(dataset.ingested_at) if dataset.ingested_at else None,
        "orphan_tweets": dataset.orphan_tweets,
        "label_counts": dataset.label_counts(),
        "tweet_count": dataset.tweet_count(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(meta) + "\n")
        for tl in dataset.timelines:
            row = {"account": tl.account.to_record(), "tweets": [t.to_record() for t in tl.tweets]}
            fh.write(canonical_json(row) + "\n")


def load_dataset(path: str | Path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValidationError(f"dataset file {path} is empty")
        try:
            meta = json.loads(header)
        except json.JSONDecodeError:
            raise ValidationError(f"dataset file {path} has a corrupt header") from None
        if meta.get("artifact") != "dataset":
            raise ValidationError(f"{path} is not a dataset artifact")
        if meta.get("version") != DATASET_FORMAT_VERSION:
            raise ValidationError(f"{path}: unsupported dataset format version {meta.get('version')!r}")
        timelines = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            where = f"dataset line {lineno}"
            account = account_from_record(row["account"], where)
            tweets = [tweet_from_record(rec, where) for rec in row["tweets"]]
            timelines.append(Timeline(account=account, tweets=tweets))
    ingested = meta.get("ingested_at")
    return Dataset(
        timelines=timelines,
        cap=meta["cap"],
        source=meta.get("source", {}),
        ingested_at=parse_timestamp(ingested) if ingested else None,
        orphan_tweets=meta.get("orphan_tweets", 0),
    )


# --- summary ------------------------------------------------------------


def dataset_summary(dataset: Dataset, reference_date: datetime = REFERENCE_DATE) -> dict:
    """Per-label corpus statistics (account/tweet counts, mean age,
    follower and following means) relative to the reference date."""
    rows: dict[str, dict] = {}
    total_accounts = len(dataset.timelines)
    for label in LABELS:
        group = [tl for tl in dataset.timelines if tl.account.label == label]
        if not group:
            continue
        n = len(group)
        ages = [age_in_days(tl.account.created_at, reference_date) for tl in group]
        rows[label] = {
            "accounts": n,
            "percent": 100.0 * n / total_accounts if total_accounts else 0.0,
            "tweets": sum(len(tl.tweets) for tl in group),
            "avg_age_days": sum(ages) / n,
            "avg_followers": sum(tl.account.followers_count for tl in group) / n,
            "avg_following": sum(tl.account.following_count for tl in group) / n,
        }
    return rows


def age_in_days(created_at: datetime, reference_date: datetime = REFERENCE_DATE) -> int:
    """Whole days (floored) from account creation to the reference date."""
    delta = reference_date - created_at.astimezone(timezone.utc)
    return int(delta.total_seconds() // 86400)


def render_summary(summary: dict) -> str:
    from .formatting import fmt_int, fmt_num, fmt_pct

    labels = [label for label in LABELS if label in summary]
    lines = ["| | " + " | ".join(label.capitalize() + "s" for label in labels) + " |",
             "|---|" + "---|" * len(labels)]

    def row(title, fn):
        cells = " | ".join(fn(summary[label]) for label in labels)
        lines.append(f"| {title} | {cells} |")

    row("# of Accounts", lambda s: f"{fmt_int(s['accounts'])} ({fmt_pct(s['percent'])})")
    row("# of Tweets", lambda s: fmt_int(s["tweets"]))
    row("Avg. Account Age (days)", lambda s: fmt_num(s["avg_age_days"]))
    row("Avg. # Followers", lambda s: fmt_num(s["avg_followers"]))
    row("Avg. # Following", lambda s: fmt_num(s["avg_following"]))
    return "\n".join(lines) + "\n"
