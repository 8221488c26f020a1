"""Synthetic benchmark corpus generator.

Control accounts draw from one generative process (creation date,
follower counts, activity window, phrase pool, background language mix).
Troll accounts reuse the same process plus explicit signal knobs: an
injected lexicon and hashtag set, an elevated daily tweet rate, a larger
Russian-tagged tweet fraction, and a later creation window.  Setting
every knob to its null value makes the troll process identical to the
control process, so labels carry no signal and downstream AUC sits near
0.5 by construction.

Each account gets its own generator seeded from (master seed, account
index), so output is independent of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hashing import canonical_json, split_seed

# Neutral text pools.  Vocabulary deliberately overlaps across phrases so
# bag-of-words columns are shared between accounts.
PHRASES = (
    "coffee first then the rest of the day",
    "great match last night the defense was solid",
    "new episode drops tonight so excited",
    "traffic on the bridge again every single morning",
    "weekend hike photos coming soon",
    "trying a new pasta recipe tonight",
    "the weather turned cold really fast this year",
    "reading a good book about ocean exploration",
    "my garden tomatoes finally turned red",
    "concert tickets went on sale this morning",
    "the gym was packed again today",
    "homemade bread came out better this time",
    "puppy learned a new trick today",
    "long run by the river felt great",
    "board game night with friends was fun",
    "airport delays again but at least free wifi",
    "season finale left so many questions",
    "farmers market haul looks amazing",
    "learning guitar chords slowly but surely",
    "rainy day calls for soup and a movie",
    "the playoffs start this week finally",
    "new phone battery lasts forever compared to the old one",
    "painting the kitchen this weekend wish me luck",
    "city marathon route goes right past my place",
    "found a great little bakery downtown",
    "my team lost again but the game was close",
    "museum exhibit on space travel was incredible",
    "recipe calls for basil but the store was out",
    "bike lane construction finally finished",
    "late night coding session with too much coffee",
    "the lake was frozen solid this morning",
    "grandma's birthday dinner was wonderful",
    "first snow of the season looks beautiful",
    "podcast episode about deep sea creatures blew my mind",
    "road trip playlist needs more classic rock",
    "the jazz festival lineup looks solid this year",
    "fresh snow on the trail made the hike slow",
    "library book sale this saturday do not miss it",
    "leftover pizza is the best breakfast",
    "sunset from the rooftop tonight was unreal",
)

CYRILLIC_PHRASES = (
    "сегодня холодно но солнечно",
    "новый фильм очень понравился",
    "кофе утром лучше всего",
    "зима близко готовьте санки",
    "матч был отличный вчера",
    "книга про море очень интересная",
    "погода сегодня отличная для прогулки",
    "новый рецепт супа удался",
)

DESCRIPTION_WORDS = (
    "coffee", "runner", "parent", "photographer", "gamer", "reader", "traveler",
    "foodie", "engineer", "teacher", "artist", "cyclist", "dreamer", "builder",
    "music", "lover", "local", "news", "sports", "fan", "weather", "watcher",
)

NEUTRAL_HASHTAGS = (
    "mondaymotivation", "coffee", "sports", "weather", "music", "foodie",
    "travel", "books", "movies", "fitness", "news", "photography",
)

HANDLE_POOL = (
    "sam_writes", "notthereal", "coffeefan42", "citydesk", "oldlinebot",
    "gardengal", "trackside", "deskjockey", "rainorshine", "nightowl99",
)

URL_POOL = (
    "https://example.com/a1", "https://example.com/b2", "https://news.example.org/x",
    "https://blog.example.net/post/7", "https://example.com/c3",
)

# Invented troll-signal content; nothing here is drawn from any real
# influence-operation dataset.
TROLL_LEXICON = ("zorvath", "quelldor", "mirelka", "vostrenko", "drazhny")
TROLL_HASHTAGS = ("ZorvathRising", "TruthStorm", "WakeUpNow")

_BASE_LANGS = ("en", "es", "de", "ru")
_BASE_LANG_P = (0.97, 0.01, 0.01, 0.01)


@dataclass(frozen=True)
class SyntheticSpec:
    control_count: int = 5000
    troll_count: int = 100
    # shared population parameters
    control_creation: tuple[str, str] = ("2009-01-01", "2017-12-31")
    window_end: tuple[str, str] = ("2018-10-01", "2018-12-31")
    window_days: tuple[int, int] = (14, 40)
    daily_rate: tuple[float, float] = (0.5, 3.0)
    followers_lognorm: tuple[float, float] = (5.7, 1.2)
    following_lognorm: tuple[float, float] = (5.5, 1.0)
    # troll signal knobs; zeros mean "same as control"
    troll_creation: tuple[str, str] = ("2014-01-01", "2018-06-30")
    extra_daily_rate: float = 2.5
    russian_fraction: float = 0.06
    lexicon_rate: float = 0.15
    hashtag_rate: float = 0.08
    troll_lexicon: tuple[str, ...] = TROLL_LEXICON
    troll_hashtags: tuple[str, ...] = TROLL_HASHTAGS

    def null_signal(self) -> "SyntheticSpec":
        """Troll process identical to control: labels become pure noise."""
        return replace(
            self,
            troll_creation=self.control_creation,
            extra_daily_rate=0.0,
            russian_fraction=0.0,
            lexicon_rate=0.0,
            hashtag_rate=0.0,
            troll_lexicon=(),
            troll_hashtags=(),
        )


def _day_range(bounds: tuple[str, str]) -> tuple[int, int]:
    start = date.fromisoformat(bounds[0]).toordinal()
    end = date.fromisoformat(bounds[1]).toordinal()
    if end < start:
        raise ValidationError(f"date window {bounds} is reversed")
    return start, end


def _stamp(day_ordinal: int, seconds: int) -> str:
    d = date.fromordinal(day_ordinal)
    ts = datetime(d.year, d.month, d.day, tzinfo=timezone.utc) + timedelta(seconds=int(seconds))
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def generate_synthetic(spec: SyntheticSpec, seed: int, accounts_path: str | Path,
                       tweets_path: str | Path, labeled: bool = True) -> tuple[int, int]:
    """Write accounts and tweets files; returns (accounts, tweets) counts.

    With labeled=False every account is marked 'unlabeled' (a scoring
    batch); the underlying control/troll mix is still generated so scored
    cohorts have something to find.
    """
    if spec.control_count < 0 or spec.troll_count < 0:
        raise ValidationError("account counts must be >= 0")
    if spec.control_count + spec.troll_count == 0:
        raise ValidationError("nothing to generate")
    total_tweets = 0
    index = 0
    with open(accounts_path, "w", encoding="utf-8") as acc_fh, \
            open(tweets_path, "w", encoding="utf-8") as tw_fh:
        for kind, count in (("control", spec.control_count), ("troll", spec.troll_count)):
            for _ in range(count):
                index += 1
                total_tweets += _write_account(spec, seed, index, kind, labeled, acc_fh, tw_fh)
    return index, total_tweets


def _write_account(spec: SyntheticSpec, seed: int, index: int, kind: str,
                   labeled: bool, acc_fh, tw_fh) -> int:
    rng = np.random.default_rng(split_seed(seed, f"acct-{index}"))
    troll = kind == "troll"
    acct_id = f"u{index:06d}"

    creation = spec.troll_creation if troll else spec.control_creation
    c0, c1 = _day_range(creation)
    created = _stamp(int(rng.integers(c0, c1 + 1)), int(rng.integers(0, 86400)))

    followers = int(rng.lognormal(*spec.followers_lognorm))
    following = int(rng.lognormal(*spec.following_lognorm))
    n_desc = int(rng.integers(0, 9))
    description = " ".join(_pick(rng, DESCRIPTION_WORDS) for _ in range(n_desc))

    acc_fh.write(canonical_json({
        "id": acct_id,
        "screen_name": f"{_pick(rng, HANDLE_POOL)}_{index}",
        "created_at": created,
        "description": description,
        "followers_count": followers,
        "following_count": following,
        "label": kind if labeled else "unlabeled",
    }) + "\n")

    w0, w1 = _day_range(spec.window_end)
    end_day = int(rng.integers(w0, w1 + 1))
    window = int(rng.integers(spec.window_days[0], spec.window_days[1] + 1))
    rate = float(rng.uniform(*spec.daily_rate))
    if troll:
        rate += spec.extra_daily_rate

    serial = 0
    for offset in range(window):
        day = end_day - window + 1 + offset
        for _ in range(int(rng.poisson(rate))):
            serial += 1
            tw_fh.write(canonical_json(_make_tweet(
                spec, rng, troll, acct_id, f"{acct_id}s{serial:05d}",
                day, int(rng.integers(0, 86400)))) + "\n")
    return serial


def _pick(rng, pool):
    return pool[int(rng.integers(0, len(pool)))]


def _make_tweet(spec: SyntheticSpec, rng, troll: bool, acct_id: str, tweet_id: str,
                day: int, seconds: int) -> dict:
    p_ru = _BASE_LANG_P[3] + (spec.russian_fraction if troll else 0.0)
    roll = float(rng.random())
    if roll < p_ru:
        lang = "ru"
        words = _pick(rng, CYRILLIC_PHRASES).split()
    else:
        lang = _pick_lang(rng)
        words = _pick(rng, PHRASES).split()

    if troll and spec.troll_lexicon and float(rng.random()) < spec.lexicon_rate:
        pos = int(rng.integers(0, len(words) + 1))
        words.insert(pos, _pick(rng, spec.troll_lexicon))
    if float(rng.random()) < 0.10:
        words.append("#" + _pick(rng, NEUTRAL_HASHTAGS))
    if troll and spec.troll_hashtags and float(rng.random()) < spec.hashtag_rate:
        words.append("#" + _pick(rng, spec.troll_hashtags))
    if float(rng.random()) < 0.12:
        words.append(_pick(rng, URL_POOL))

    text = " ".join(words)
    is_retweet = float(rng.random()) < 0.20
    if is_retweet:
        text = f"RT @{_pick(rng, HANDLE_POOL)}: {text}"
    elif float(rng.random()) < 0.15:
        text = f"@{_pick(rng, HANDLE_POOL)} {text}"

    return {
        "id": tweet_id,
        "account_id": acct_id,
        "created_at": _stamp(day, seconds),
        "text": text,
        "is_retweet": is_retweet,
        "lang": lang,
    }


def _pick_lang(rng) -> str:
    # non-ru background languages, renormalized
    roll = float(rng.random())
    acc = 0.0
    total = sum(_BASE_LANG_P[:3])
    for code, p in zip(_BASE_LANGS[:3], _BASE_LANG_P[:3]):
        acc += p / total
        if roll < acc:
            return code
    return "en"
