import json

import pytest

from trolldet.corpus import ingest


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return str(path)


GOLDEN_ACCOUNT = {
    "id": "acct1",
    "screen_name": "sample_one",
    "created_at": "2018-12-02T00:00:00Z",
    "description": "Just a test profile",
    "followers_count": 10,
    "following_count": 4,
    "label": "troll",
}

# Five tweets over three calendar days: daily counts 3, 0, 2.
GOLDEN_TWEETS = [
    {"id": "t1", "account_id": "acct1", "created_at": "2018-12-20T09:00:00Z",
     "text": "the cat sat on the mat", "lang": "en"},
    {"id": "t2", "account_id": "acct1", "created_at": "2018-12-20T10:00:00Z",
     "text": "#MAGA hello @jane https://t.co/x", "lang": "en"},
    {"id": "t3", "account_id": "acct1", "created_at": "2018-12-20T11:00:00Z",
     "text": "RT @bob: winter is coming", "lang": "en"},
    {"id": "t4", "account_id": "acct1", "created_at": "2018-12-22T08:00:00Z",
     "text": "зима близко", "lang": "ru"},
    {"id": "t5", "account_id": "acct1", "created_at": "2018-12-22T09:00:00Z",
     "text": "Visit https://example.com now", "lang": "en"},
]


@pytest.fixture
def golden_dataset(tmp_path):
    accounts = write_jsonl(tmp_path / "accounts.jsonl", [GOLDEN_ACCOUNT])
    tweets = write_jsonl(tmp_path / "tweets.jsonl", GOLDEN_TWEETS)
    return ingest(accounts, tweets)


def tiny_corpus(tmp_path, n_troll=3, n_control=5):
    """Small labeled corpus with distinct text habits per label."""
    accounts, tweets = [], []
    for i in range(n_troll + n_control):
        label = "troll" if i < n_troll else "control"
        acct = f"u{i:03d}"
        accounts.append({
            "id": acct, "screen_name": f"user{i}",
            "created_at": f"2016-03-{(i % 27) + 1:02d}T00:00:00Z",
            "description": "hello world", "followers_count": 40 + i,
            "following_count": 15 + i, "label": label,
        })
        for j in range(4):
            text = ("agitprop storm rising now" if label == "troll"
                    else "lovely weather and calm coffee today")
            tweets.append({
                "id": f"{acct}s{j}", "account_id": acct,
                "created_at": f"2018-06-{j + 10:02d}T12:00:00Z",
                "text": text, "lang": "en",
            })
    return (write_jsonl(tmp_path / "tiny_accounts.jsonl", accounts),
            write_jsonl(tmp_path / "tiny_tweets.jsonl", tweets))
