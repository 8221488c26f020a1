"""Human-evaluation support: review sampling, inter-rater agreement,
rating aggregation, and flagged-vs-unflagged cohort reports.

Raters see a shuffled mix of flagged and unflagged accounts; the flag key
is written separately so the rating sheet carries no hint of the model's
opinion.  Agreement is Krippendorff's alpha with the interval metric,
computed over pairable values only (units rated by at least two raters).
"""

from __future__ import annotations

import csv
import random
import statistics
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import Dataset, REFERENCE_DATE, age_in_days
from .errors import ValidationError
from .featurize import compute_stats
from .formatting import fmt_int, fmt_num, fmt_pct

# --- review sampling --------------------------------------------------------


def sample_for_review(flagged_ids: Sequence[str], unflagged_ids: Sequence[str],
                      n: int = 50, seed: int = 0) -> tuple[list[str], dict[str, bool]]:
    """Draw n accounts uniformly without replacement from each pool and
    shuffle the combined list (seeded).  Returns (ordered ids, flag key)."""
    flagged = list(flagged_ids)
    unflagged = list(unflagged_ids)
    if len(set(flagged)) != len(flagged) or len(set(unflagged)) != len(unflagged):
        raise ValidationError("review pools may not contain duplicate ids")
    overlap = set(flagged) & set(unflagged)
    if overlap:
        raise ValidationError(f"account {sorted(overlap)[0]!r} appears in both pools")
    if n < 1:
        raise ValidationError("sample size must be >= 1")
    if n > len(flagged) or n > len(unflagged):
        raise ValidationError(f"sample size {n} exceeds a pool "
                              f"({len(flagged)} flagged / {len(unflagged)} unflagged)")
    rng = random.Random(seed)
    picked_flagged = rng.sample(flagged, n)
    picked_unflagged = rng.sample(unflagged, n)
    key = {acct: True for acct in picked_flagged}
    key.update((acct, False) for acct in picked_unflagged)
    chosen = picked_flagged + picked_unflagged
    rng.shuffle(chosen)
    return chosen, key


def write_review_files(sample: Sequence[str], key: Mapping[str, bool],
                       sample_path: str | Path, key_path: str | Path) -> None:
    with open(sample_path, "w", encoding="utf-8") as fh:
        fh.write("account_id\n")
        for acct in sample:
            fh.write(f"{acct}\n")
    with open(key_path, "w", encoding="utf-8") as fh:
        fh.write("account_id,flagged\n")
        for acct in sample:
            fh.write(f"{acct},{'true' if key[acct] else 'false'}\n")


# --- ratings -----------------------------------------------------------------


def load_ratings(path: str | Path) -> dict[str, dict[str, float]]:
    """ratings.csv rows: account_id, rater_id, rating."""
    ratings: dict[str, dict[str, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"account_id", "rater_id", "rating"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValidationError(f"{path}: header must include {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            acct, rater = row["account_id"], row["rater_id"]
            try:
                value = float(row["rating"])
            except (TypeError, ValueError):
                raise ValidationError(f"{path} line {lineno}: rating must be numeric") from None
            cell = ratings.setdefault(acct, {})
            if rater in cell:
                raise ValidationError(f"{path} line {lineno}: duplicate rating for "
                                      f"account {acct!r} by rater {rater!r}")
            cell[rater] = value
    return ratings


def load_flag_key(path: str | Path) -> dict[str, bool]:
    key: dict[str, bool] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            if "account_id" not in row or "flagged" not in row:
                raise ValidationError(f"{path}: header must include account_id,flagged")
            key[row["account_id"]] = row["flagged"].strip().lower() in ("true", "1", "yes")
    return key


# --- Krippendorff's alpha ------------------------------------------------------


def krippendorff_alpha(ratings) -> float:
    """Interval-metric alpha = 1 - D_o/D_e over pairable values.

    `ratings` is either {unit: {rater: value}} or a 2-D array with NaN for
    missing cells.  Units with fewer than two ratings are excluded; by
    convention alpha is 1.0 when observed disagreement is zero and the
    values admit no expected disagreement (D_e = 0).
    """
    units = _pairable_units(ratings)
    if not units:
        raise ValidationError("alpha needs at least one unit with two or more ratings")
    values = np.concatenate(units)
    n = len(values)
    d_obs = 0.0
    for unit in units:
        m = len(unit)
        diffs = unit[:, None] - unit[None, :]
        d_obs += float((diffs * diffs).sum()) / (m - 1)
    d_obs /= n
    total = float(values.sum())
    sq_total = float((values * values).sum())
    d_exp = (2.0 * n * sq_total - 2.0 * total * total) / (n * (n - 1))
    if d_exp == 0.0:
        return 1.0
    return 1.0 - d_obs / d_exp


def _pairable_units(ratings) -> list[np.ndarray]:
    units = []
    if isinstance(ratings, Mapping):
        rows = [list(cell.values()) for _, cell in sorted(ratings.items())]
    else:
        matrix = np.asarray(ratings, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValidationError("rating matrix must be 2-D (units x raters)")
        rows = [row[~np.isnan(row)].tolist() for row in matrix]
    for row in rows:
        vals = np.asarray(row, dtype=np.float64)
        if np.isnan(vals).any():
            raise ValidationError("ratings must be numeric")
        if len(vals) >= 2:
            units.append(vals)
    return units


# --- aggregation ----------------------------------------------------------------


@dataclass
class AgreementReport:
    alpha: float
    account_means: dict[str, float]
    medians: dict[str, float]          # overall / flagged / unflagged
    flagged_mean_above: int            # flagged accounts with mean rating > 3
    raters_above: dict[int, int]       # m -> flagged accounts with >= m raters above 3
    n_flagged: int
    n_unflagged: int


def aggregate_ratings(ratings: Mapping[str, Mapping[str, float]],
                      key: Mapping[str, bool]) -> AgreementReport:
    """Per-account mean ratings, cohort medians, and above-threshold counts
    for the flagged cohort.  Every rated account must appear in the key."""
    for acct in ratings:
        if acct not in key:
            raise ValidationError(f"rated account {acct!r} is not in the flag key")
    if not ratings:
        raise ValidationError("no ratings to aggregate")
    means = {acct: sum(cell.values()) / len(cell) for acct, cell in ratings.items() if cell}
    flagged_means = [m for acct, m in means.items() if key[acct]]
    unflagged_means = [m for acct, m in means.items() if not key[acct]]
    medians = {"overall": statistics.median(means.values())}
    if flagged_means:
        medians["flagged"] = statistics.median(flagged_means)
    if unflagged_means:
        medians["unflagged"] = statistics.median(unflagged_means)

    above = 0
    raters_above: dict[int, int] = {}
    max_raters = max((len(cell) for cell in ratings.values()), default=0)
    for acct, cell in ratings.items():
        if not key[acct]:
            continue
        if means[acct] > 3:
            above += 1
        high = sum(1 for v in cell.values() if v > 3)
        for m in range(1, max_raters + 1):
            if high >= m:
                raters_above[m] = raters_above.get(m, 0) + 1
    for m in range(1, max_raters + 1):
        raters_above.setdefault(m, 0)

    return AgreementReport(
        alpha=krippendorff_alpha(ratings),
        account_means=means,
        medians=medians,
        flagged_mean_above=above,
        raters_above=raters_above,
        n_flagged=len(flagged_means),
        n_unflagged=len(unflagged_means),
    )


def render_agreement_md(report: AgreementReport) -> str:
    lines = [
        "# Human review agreement",
        "",
        f"Krippendorff's alpha (interval): {fmt_num(report.alpha, 3)}",
        "",
        f"Accounts rated: {report.n_flagged} flagged, {report.n_unflagged} unflagged",
        "",
        "| Cohort | Median of mean ratings |",
        "|---|---|",
    ]
    for name in ("overall", "flagged", "unflagged"):
        if name in report.medians:
            lines.append(f"| {name.capitalize()} | {fmt_num(report.medians[name])} |")
    n = report.n_flagged
    if n:
        pct = 100.0 * report.flagged_mean_above / n
        lines += ["", f"Flagged accounts with mean rating > 3: "
                      f"{report.flagged_mean_above}/{n} ({fmt_pct(pct, 0)})"]
        for m in sorted(report.raters_above):
            count = report.raters_above[m]
            pct = 100.0 * count / n
            lines.append(f"Flagged accounts with >= {m} raters above 3: "
                         f"{count}/{n} ({fmt_pct(pct, 0)})")
    return "\n".join(lines) + "\n"


# --- cohort comparison ------------------------------------------------------------


@dataclass
class CohortStats:
    name: str
    accounts: int
    avg_age_days: float
    avg_followers: float
    avg_following: float
    tweets: int
    avg_tweets: float
    avg_daily: float
    std_daily: float
    languages: list = field(default_factory=list)   # [(code, count)] desc
    hashtags: list = field(default_factory=list)    # [(tag, count)] desc


@dataclass
class CohortReport:
    flagged: CohortStats
    unflagged: CohortStats


def cohort_compare(dataset: Dataset, flags: Mapping[str, bool],
                   reference_date: datetime = REFERENCE_DATE,
                   top_languages: int = 3, top_hashtags: int = 10) -> CohortReport:
    """Profile/volume/language/hashtag comparison of flagged vs unflagged
    timelines.  Every account in the dataset must have a flag."""
    missing = [tl.account.id for tl in dataset.timelines if tl.account.id not in flags]
    if missing:
        raise ValidationError(f"account {missing[0]!r} has no flag; score it first")
    groups = {
        True: [tl for tl in dataset.timelines if flags[tl.account.id]],
        False: [tl for tl in dataset.timelines if not flags[tl.account.id]],
    }
    return CohortReport(
        flagged=_cohort_stats("Flagged", groups[True], reference_date, top_languages, top_hashtags),
        unflagged=_cohort_stats("Unflagged", groups[False], reference_date, top_languages, top_hashtags),
    )


def _cohort_stats(name, timelines, reference_date, top_languages, top_hashtags) -> CohortStats:
    from collections import Counter

    n = len(timelines)
    if n == 0:
        return CohortStats(name=name, accounts=0, avg_age_days=0.0, avg_followers=0.0,
                           avg_following=0.0, tweets=0, avg_tweets=0.0,
                           avg_daily=0.0, std_daily=0.0)
    ages, followers, following, dailies = [], [], [], []
    total_tweets = 0
    lang_counts: Counter = Counter()
    tag_counts: Counter = Counter()
    for tl in timelines:
        acct = tl.account
        ages.append(age_in_days(acct.created_at, reference_date))
        followers.append(acct.followers_count)
        following.append(acct.following_count)
        total_tweets += len(tl.tweets)
        stats = compute_stats(tl, reference_date)
        dailies.append(stats.behavior[6])  # avg tweets per day
        for tweet in tl.tweets:
            lang_counts[tweet.lang] += 1
            tag_counts.update(tweet.hashtags)
    dailies = np.asarray(dailies, dtype=np.float64)
    languages = sorted(lang_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_languages]
    hashtags = sorted(tag_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_hashtags]
    return CohortStats(
        name=name,
        accounts=n,
        avg_age_days=float(np.mean(ages)),
        avg_followers=float(np.mean(followers)),
        avg_following=float(np.mean(following)),
        tweets=total_tweets,
        avg_tweets=total_tweets / n,
        avg_daily=float(dailies.mean()),
        std_daily=float(dailies.std()),
        languages=languages,
        hashtags=hashtags,
    )


def render_cohorts_md(report: CohortReport) -> str:
    f, u = report.flagged, report.unflagged
    lines = [
        "# Cohort comparison",
        "",
        "| | Flagged | Unflagged |",
        "|---|---|---|",
        f"| # of Accounts | {fmt_int(f.accounts)} | {fmt_int(u.accounts)} |",
        f"| Avg Account Age (days) | {fmt_num(f.avg_age_days)} | {fmt_num(u.avg_age_days)} |",
        f"| Avg # of Followers | {fmt_num(f.avg_followers)} | {fmt_num(u.avg_followers)} |",
        f"| Avg # of Following | {fmt_num(f.avg_following)} | {fmt_num(u.avg_following)} |",
        f"| # of Tweets | {fmt_int(f.tweets)} | {fmt_int(u.tweets)} |",
        f"| Avg # of Tweets | {fmt_num(f.avg_tweets)} | {fmt_num(u.avg_tweets)} |",
        f"| Avg # of Daily Tweets | {format_daily(f)} | {format_daily(u)} |",
        "",
        "## Top languages (per-tweet counts)",
        "",
    ]
    lines += _count_table([(code, count) for code, count in f.languages],
                          [(code, count) for code, count in u.languages])
    lines += ["", "## Top hashtags (per-occurrence counts)", ""]
    lines += _count_table(f.hashtags, u.hashtags)
    return "\n".join(lines) + "\n"


def format_daily(stats: CohortStats) -> str:
    return f"{fmt_num(stats.avg_daily)} (σ={fmt_num(stats.std_daily)})"


def _count_table(flagged_rows, unflagged_rows) -> list[str]:
    lines = ["| Flagged | Count | Unflagged | Count |", "|---|---|---|---|"]
    width = max(len(flagged_rows), len(unflagged_rows))
    for i in range(width):
        fcell = flagged_rows[i] if i < len(flagged_rows) else ("", "")
        ucell = unflagged_rows[i] if i < len(unflagged_rows) else ("", "")
        fcount = fmt_int(fcell[1]) if fcell[0] != "" else ""
        ucount = fmt_int(ucell[1]) if ucell[0] != "" else ""
        lines.append(f"| {fcell[0]} | {fcount} | {ucell[0]} | {ucount} |")
    return lines
