"""Canonical JSON, content hashing, and seed derivation.

Every artifact the pipeline writes goes through canonical_json so that
reruns with the same inputs produce byte-identical files.  Stage seeds are
derived from the single master seed by hashing the stage name, so adding a
stage never shifts the randomness of existing ones.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

MASK64 = (1 << 64) - 1


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(obj: Any) -> str:
    """sha256 hex digest of the canonical JSON encoding of obj."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def file_hash(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def split_seed(master_seed: int, stage: str) -> int:
    """Derive a stage-specific 64-bit seed from the master seed."""
    digest = hashlib.sha256(f"{master_seed & MASK64}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
