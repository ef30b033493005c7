"""Canonicalize spec sentences and collapse exact duplicates into classes.

The canonical form is NFKC normalization (the corpus mixes full-width and
half-width forms), leading/trailing whitespace trimmed, internal whitespace
runs collapsed to a single space, and ASCII letters lower-cased. Punctuation
is kept: exact matching means string equality, and stripping it would silently
merge distinct mechanics.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus
from .errors import NormalizationError

_WS_RUN = re.compile(r"\s+")
_ASCII_LOWER = str.maketrans(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ", "abcdefghijklmnopqrstuvwxyz")


@dataclass(frozen=True)
class NormalizedText:
    value: str
    source_record_ids: tuple[str, ...]


@dataclass
class ExactClasses:
    """Partition of records by canonical text, ordered by first occurrence."""

    classes: list[NormalizedText]
    index: dict[str, int]

    def __len__(self) -> int:
        return len(self.classes)

    def texts(self) -> list[str]:
        return [c.value for c in self.classes]

    def record_count(self) -> int:
        return sum(len(c.source_record_ids) for c in self.classes)


def normalize_text(raw: str) -> str:
    """Canonical form of one spec sentence; idempotent."""
    value = unicodedata.normalize("NFKC", raw)
    value = _WS_RUN.sub(" ", value).strip()
    value = value.translate(_ASCII_LOWER)
    if not value:
        raise NormalizationError("text is empty after normalization")
    return value


def dedup_exact(corpus: Corpus) -> ExactClasses:
    """Group records whose canonical texts are string-identical."""
    order: list[str] = []
    positions: dict[str, int] = {}
    members: dict[str, list[str]] = {}
    index: dict[str, int] = {}
    for rec in corpus.records:
        try:
            canon = normalize_text(rec.raw_text)
        except NormalizationError as exc:
            raise NormalizationError(f"record {rec.record_id}: {exc}") from exc
        if canon not in positions:
            positions[canon] = len(order)
            order.append(canon)
            members[canon] = []
        index[rec.record_id] = positions[canon]
        members[canon].append(rec.record_id)
    classes = [NormalizedText(value=canon, source_record_ids=tuple(members[canon]))
               for canon in order]
    return ExactClasses(classes=classes, index=index)


def dump_exact_classes(classes: ExactClasses, path: str | Path) -> None:
    """One JSONL row per class: {canonical_text, record_ids}."""
    lines = [json.dumps({"canonical_text": c.value,
                         "record_ids": list(c.source_record_ids)},
                        ensure_ascii=False)
             for c in classes.classes]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_exact_classes(path: str | Path) -> ExactClasses:
    classes: list[NormalizedText] = []
    index: dict[str, int] = {}
    for pos, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        obj = json.loads(line)
        rids = tuple(obj["record_ids"])
        classes.append(NormalizedText(value=obj["canonical_text"], source_record_ids=rids))
        for rid in rids:
            index[rid] = pos
    return ExactClasses(classes=classes, index=index)
