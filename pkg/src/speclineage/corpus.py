"""Load, validate, and address the raw corpus of items and their spec sentences.

A corpus couples items (the entities being compared, e.g. game titles) with
spec records (one feature-description sentence each, tied to the annotator
who entered it). File formats:

* CSV: UTF-8, header ``item_id,title,release_date,annotator_id,spec_text``.
* JSONL: one record object per line with the same field names.

An item is registered by the first row that carries a non-empty title for its
``item_id``; later rows may leave title/release_date blank. Record ids are
derived as ``item_id/annotator_id/seq`` so reruns over the same bytes produce
identical corpora.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusValidationError, InputFormatError

CSV_FIELDS = ("item_id", "title", "release_date", "annotator_id", "spec_text")
FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class Item:
    item_id: str
    title: str
    release_date: dt.date | None = None
    group_label: str | None = None


@dataclass(frozen=True)
class SpecRecord:
    record_id: str
    item_id: str
    raw_text: str
    annotator_id: str
    seq: int


@dataclass
class Corpus:
    items: list[Item]
    records: list[SpecRecord]

    def __post_init__(self):
        self._by_id = {it.item_id: it for it in self.items}
        if len(self._by_id) != len(self.items):
            raise CorpusValidationError("duplicate item_id in corpus")
        for rec in self.records:
            if rec.item_id not in self._by_id:
                raise CorpusValidationError(
                    f"record {rec.record_id} references unknown item {rec.item_id!r}")

    def item(self, item_id: str) -> Item:
        return self._by_id[item_id]

    def has_item(self, item_id: str) -> bool:
        return item_id in self._by_id

    def records_of(self, item_id: str) -> list[SpecRecord]:
        return [r for r in self.records if r.item_id == item_id]


@dataclass
class ValidationReport:
    duplicate_record_ids: list[str] = field(default_factory=list)
    empty_texts: list[str] = field(default_factory=list)
    items_without_records: list[str] = field(default_factory=list)
    single_annotator_items: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not (self.duplicate_record_ids or self.empty_texts
                    or self.items_without_records or self.single_annotator_items)

    def lines(self) -> list[str]:
        out = []
        for rid in self.duplicate_record_ids:
            out.append(f"duplicate record_id: {rid}")
        for rid in self.empty_texts:
            out.append(f"empty spec text: {rid}")
        for iid in self.items_without_records:
            out.append(f"item without records: {iid}")
        for iid in self.single_annotator_items:
            out.append(f"item annotated by a single coder (two-coder rule): {iid}")
        return out


def _parse_date(value: str, where: str) -> dt.date | None:
    if not value:
        return None
    try:
        return dt.date.fromisoformat(value)
    except ValueError as exc:
        raise InputFormatError(f"{where}: bad release_date {value!r}") from exc


def load_corpus(path: str | Path, format: str = "csv") -> Corpus:
    """Read a corpus file; records keep file order, seq per (item, annotator)."""
    if format not in FORMATS:
        raise InputFormatError(f"unknown corpus format {format!r}")
    path = Path(path)
    raw_rows = _read_rows(path, format)

    items: list[Item] = []
    seen_items: dict[str, Item] = {}
    records: list[SpecRecord] = []
    seq_counter: dict[tuple[str, str], int] = {}
    for lineno, row in raw_rows:
        where = f"{path.name}:{lineno}"
        item_id = (row.get("item_id") or "").strip()
        if not item_id:
            raise InputFormatError(f"{where}: missing item_id")
        title = (row.get("title") or "").strip()
        if title and item_id not in seen_items:
            item = Item(item_id=item_id, title=title,
                        release_date=_parse_date((row.get("release_date") or "").strip(), where))
            seen_items[item_id] = item
            items.append(item)
        text = row.get("spec_text") or ""
        if not text.strip():
            raise CorpusValidationError(f"{where}: empty spec_text for item {item_id!r}")
        annotator = (row.get("annotator_id") or "").strip()
        if not annotator:
            raise InputFormatError(f"{where}: missing annotator_id")
        key = (item_id, annotator)
        seq_counter[key] = seq_counter.get(key, 0) + 1
        records.append(SpecRecord(
            record_id=f"{item_id}/{annotator}/{seq_counter[key]}",
            item_id=item_id, raw_text=text, annotator_id=annotator,
            seq=seq_counter[key]))

    for lineno, row in raw_rows:
        item_id = (row.get("item_id") or "").strip()
        if item_id not in seen_items:
            raise CorpusValidationError(
                f"{path.name}:{lineno}: record references unknown item {item_id!r} "
                "(no row ever provided its title)")
    return Corpus(items=items, records=records)


def _read_rows(path: Path, format: str) -> list[tuple[int, dict]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        raise
    rows: list[tuple[int, dict]] = []
    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise InputFormatError(f"{path.name}:1: empty file") from None
        if tuple(h.strip() for h in header) != CSV_FIELDS:
            raise InputFormatError(
                f"{path.name}:1: expected header {','.join(CSV_FIELDS)}")
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(CSV_FIELDS):
                raise InputFormatError(
                    f"{path.name}:{lineno}: expected {len(CSV_FIELDS)} columns, got {len(cells)}")
            rows.append((lineno, dict(zip(CSV_FIELDS, cells))))
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"{path.name}:{lineno}: bad JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise InputFormatError(f"{path.name}:{lineno}: expected an object")
            rows.append((lineno, {k: ("" if obj.get(k) is None else str(obj.get(k)))
                                  for k in CSV_FIELDS}))
    return rows


def save_corpus(corpus: Corpus, path: str | Path, format: str = "csv") -> None:
    """Write a corpus back out; reloading the file yields an equal corpus."""
    if format not in FORMATS:
        raise InputFormatError(f"unknown corpus format {format!r}")
    path = Path(path)
    by_id = {it.item_id: it for it in corpus.items}
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for rec in corpus.records:
            item = by_id[rec.item_id]
            writer.writerow([rec.item_id, item.title,
                             item.release_date.isoformat() if item.release_date else "",
                             rec.annotator_id, rec.raw_text])
        path.write_text(buf.getvalue(), encoding="utf-8")
    else:
        lines = []
        for rec in corpus.records:
            item = by_id[rec.item_id]
            lines.append(json.dumps({
                "item_id": rec.item_id, "title": item.title,
                "release_date": item.release_date.isoformat() if item.release_date else "",
                "annotator_id": rec.annotator_id, "spec_text": rec.raw_text,
            }, ensure_ascii=False))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def validate(corpus: Corpus) -> ValidationReport:
    """Report-only invariant scan; never raises."""
    report = ValidationReport()
    seen: set[str] = set()
    for rec in corpus.records:
        if rec.record_id in seen:
            report.duplicate_record_ids.append(rec.record_id)
        seen.add(rec.record_id)
        if not rec.raw_text.strip():
            report.empty_texts.append(rec.record_id)
    annotators: dict[str, set[str]] = {it.item_id: set() for it in corpus.items}
    counts: dict[str, int] = {it.item_id: 0 for it in corpus.items}
    for rec in corpus.records:
        counts[rec.item_id] += 1
        annotators[rec.item_id].add(rec.annotator_id)
    for it in corpus.items:
        if counts[it.item_id] == 0:
            report.items_without_records.append(it.item_id)
        elif len(annotators[it.item_id]) < 2:
            report.single_annotator_items.append(it.item_id)
    return report


def ordered_items(corpus: Corpus) -> list[Item]:
    """Items by release_date ascending when every item is dated, else input order."""
    if corpus.items and all(it.release_date is not None for it in corpus.items):
        indexed = sorted(enumerate(corpus.items), key=lambda p: (p[1].release_date, p[0]))
        return [it for _, it in indexed]
    return list(corpus.items)


def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "items": [{
            "item_id": it.item_id, "title": it.title,
            "release_date": it.release_date.isoformat() if it.release_date else None,
            "group_label": it.group_label,
        } for it in corpus.items],
        "records": [{
            "record_id": r.record_id, "item_id": r.item_id, "raw_text": r.raw_text,
            "annotator_id": r.annotator_id, "seq": r.seq,
        } for r in corpus.records],
    }


def corpus_from_dict(data: dict) -> Corpus:
    items = [Item(item_id=d["item_id"], title=d["title"],
                  release_date=dt.date.fromisoformat(d["release_date"]) if d.get("release_date") else None,
                  group_label=d.get("group_label"))
             for d in data["items"]]
    records = [SpecRecord(record_id=d["record_id"], item_id=d["item_id"],
                          raw_text=d["raw_text"], annotator_id=d["annotator_id"],
                          seq=int(d["seq"]))
               for d in data["records"]]
    return Corpus(items=items, records=records)
