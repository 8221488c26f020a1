"""Fixed English stop-word list used by the stop-word feature family.

The 179 entries below are embedded verbatim so that feature schemas stay
stable across environments; the checksum guards against accidental edits.
Entries containing an apostrophe can never match tokenizer output (the
tokenizer splits on apostrophes) so their rate columns are permanently
zero, but they stay in the list to keep the column count at 179.
"""

import hashlib

STOP_WORDS = (
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you",
    "you're", "you've", "you'll", "you'd", "your", "yours", "yourself",
    "yourselves", "he", "him", "his", "himself", "she", "she's", "her",
    "hers", "herself", "it", "it's", "its", "itself", "they", "them",
    "their", "theirs", "themselves", "what", "which", "who", "whom",
    "this", "that", "that'll", "these", "those", "am", "is", "are", "was",
    "were", "be", "been", "being", "have", "has", "had", "having", "do",
    "does", "did", "doing", "a", "an", "the", "and", "but", "if", "or",
    "because", "as", "until", "while", "of", "at", "by", "for", "with",
    "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out",
    "on", "off", "over", "under", "again", "further", "then", "once",
    "here", "there", "when", "where", "why", "how", "all", "any", "both",
    "each", "few", "more", "most", "other", "some", "such", "no", "nor",
    "not", "only", "own", "same", "so", "than", "too", "very", "s", "t",
    "can", "will", "just", "don", "don't", "should", "should've", "now",
    "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren", "aren't",
    "couldn", "couldn't", "didn", "didn't", "doesn", "doesn't", "hadn",
    "hadn't", "hasn", "hasn't", "haven", "haven't", "isn", "isn't", "ma",
    "mightn", "mightn't", "mustn", "mustn't", "needn", "needn't", "shan",
    "shan't", "shouldn", "shouldn't", "wasn", "wasn't", "weren",
    "weren't", "won", "won't", "wouldn", "wouldn't",
)

STOP_WORD_SET = frozenset(STOP_WORDS)

# sha256 over the newline-joined list; recomputed and checked at import time.
STOP_WORDS_SHA256 = "2faef318155a30d7e91c39de3f51fde2eb44a3fe24e0adb0c504fd35c7add888"


def _checksum() -> str:
    return hashlib.sha256("\n".join(STOP_WORDS).encode("utf-8")).hexdigest()


if len(STOP_WORDS) != 179:
    raise AssertionError(f"stop-word list must have 179 entries, got {len(STOP_WORDS)}")
if _checksum() != STOP_WORDS_SHA256:
    raise AssertionError("stop-word list checksum mismatch; the embedded list was edited")
