"""Spec-instance by item incidence matrix and item by item commonality counts.

The incidence export follows the published layout: UTF-8 CSV with header
``GameMechanics,GameTitle,<item title>...``, one row per spec instance, cells
0/1. Exactly 2 + item-count columns are emitted. (The original published table
reports 28 columns against 25 titles plus 2 metadata columns; the identity of
the extra column is unknown, so this exporter does not try to reproduce it.)

Commonality counts each shared equivalence class once, never per duplicated
instance, so multi-annotator duplicates cannot double-count.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .adjudication import EquivalenceClasses
from .corpus import Corpus, Item, ordered_items
from .errors import CorpusValidationError, InputFormatError
from .normalize import normalize_text


@dataclass(frozen=True)
class IncidenceRow:
    record_id: str
    item_id: str
    raw_text: str
    canonical_text: str
    class_id: int


@dataclass
class IncidenceMatrix:
    items: list[Item]
    rows: list[IncidenceRow]
    cells: list[list[int]]

    def item_ids(self) -> list[str]:
        return [it.item_id for it in self.items]

    def item_class_sets(self) -> dict[str, set[int]]:
        """Classes held by each item, read off the binary cells."""
        sets: dict[str, set[int]] = {it.item_id: set() for it in self.items}
        ids = self.item_ids()
        for row, cells in zip(self.rows, self.cells):
            for j, bit in enumerate(cells):
                if bit:
                    sets[ids[j]].add(row.class_id)
        return sets

    def class_item_sets(self) -> dict[int, set[str]]:
        """Items holding each class (cells plus each row's origin item)."""
        known = set(self.item_ids())
        ids = self.item_ids()
        sets: dict[int, set[str]] = {}
        for row, cells in zip(self.rows, self.cells):
            bucket = sets.setdefault(row.class_id, set())
            if row.item_id in known:
                bucket.add(row.item_id)
            for j, bit in enumerate(cells):
                if bit:
                    bucket.add(ids[j])
        return sets

    def class_ids(self) -> list[int]:
        return sorted({row.class_id for row in self.rows})

    def class_rows(self) -> dict[int, list[IncidenceRow]]:
        out: dict[int, list[IncidenceRow]] = {}
        for row in self.rows:
            out.setdefault(row.class_id, []).append(row)
        return out


@dataclass
class CommonalityMatrix:
    items: list[Item]
    counts: list[list[int]]

    def index_of(self, item_id: str) -> int:
        for i, it in enumerate(self.items):
            if it.item_id == item_id:
                return i
        raise KeyError(item_id)

    def row(self, item_id: str) -> list[int]:
        return list(self.counts[self.index_of(item_id)])


def build_incidence(corpus: Corpus, classes: EquivalenceClasses) -> IncidenceMatrix:
    """One row per spec instance in corpus order, one column per item."""
    missing = [r.record_id for r in corpus.records if r.record_id not in classes.class_of]
    if missing:
        raise CorpusValidationError(
            f"equivalence classes do not cover {len(missing)} records "
            f"(first: {missing[0]})")
    items = ordered_items(corpus)
    item_classes: dict[str, set[int]] = {it.item_id: set() for it in items}
    for rec in corpus.records:
        item_classes[rec.item_id].add(classes.class_of[rec.record_id])
    rows: list[IncidenceRow] = []
    cells: list[list[int]] = []
    for rec in corpus.records:
        cid = classes.class_of[rec.record_id]
        rows.append(IncidenceRow(record_id=rec.record_id, item_id=rec.item_id,
                                 raw_text=rec.raw_text,
                                 canonical_text=normalize_text(rec.raw_text),
                                 class_id=cid))
        cells.append([1 if cid in item_classes[it.item_id] else 0 for it in items])
    return IncidenceMatrix(items=items, rows=rows, cells=cells)


def commonality(inc: IncidenceMatrix) -> CommonalityMatrix:
    """Shared distinct-class counts between items, computed from the cells."""
    sets = inc.item_class_sets()
    return _counts_from_sets(inc.items, sets)


def commonality_from_class_sets(corpus: Corpus,
                                classes: EquivalenceClasses) -> CommonalityMatrix:
    """Same counts computed directly from the raw class sets (second path)."""
    items = ordered_items(corpus)
    sets: dict[str, set[int]] = {it.item_id: set() for it in items}
    for rec in corpus.records:
        sets[rec.item_id].add(classes.class_of[rec.record_id])
    return _counts_from_sets(items, sets)


def _counts_from_sets(items: list[Item], sets: dict[str, set[int]]) -> CommonalityMatrix:
    n = len(items)
    counts = [[0] * n for _ in range(n)]
    for i in range(n):
        si = sets[items[i].item_id]
        counts[i][i] = len(si)
        for j in range(i + 1, n):
            shared = len(si & sets[items[j].item_id])
            counts[i][j] = shared
            counts[j][i] = shared
    return CommonalityMatrix(items=items, counts=counts)


def export_incidence_csv(inc: IncidenceMatrix, path: str | Path) -> None:
    titles = {it.item_id: it.title for it in inc.items}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["GameMechanics", "GameTitle"] + [it.title for it in inc.items])
    for row, cells in zip(inc.rows, inc.cells):
        writer.writerow([row.canonical_text, titles.get(row.item_id, row.item_id)]
                        + cells)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_incidence_csv(path: str | Path) -> IncidenceMatrix:
    """Import a Table-3-1 layout CSV (our own export or the published data).

    Rows with canonically identical mechanic text share one class; items are
    taken from the header and identified by title.
    """
    path = Path(path)
    reader = csv.reader(io.StringIO(path.read_text(encoding="utf-8-sig")))
    try:
        header = next(reader)
    except StopIteration:
        raise InputFormatError(f"{path.name}:1: empty file") from None
    if len(header) < 3 or header[0] != "GameMechanics" or header[1] != "GameTitle":
        raise InputFormatError(
            f"{path.name}:1: expected header starting GameMechanics,GameTitle")
    items = [Item(item_id=title, title=title) for title in header[2:]]
    rows: list[IncidenceRow] = []
    cells: list[list[int]] = []
    class_pos: dict[str, int] = {}
    for lineno, record in enumerate(reader, start=2):
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(header):
            raise InputFormatError(
                f"{path.name}:{lineno}: expected {len(header)} columns, got {len(record)}")
        text, origin = record[0], record[1]
        canon = normalize_text(text)
        if canon not in class_pos:
            class_pos[canon] = len(class_pos)
        try:
            bits = [int(c) if c.strip() else 0 for c in record[2:]]
        except ValueError:
            raise InputFormatError(f"{path.name}:{lineno}: non-integer cell") from None
        rows.append(IncidenceRow(record_id=f"row{lineno}", item_id=origin,
                                 raw_text=text, canonical_text=canon,
                                 class_id=class_pos[canon]))
        cells.append(bits)
    return IncidenceMatrix(items=items, rows=rows, cells=cells)


def export_commonality_csv(cm: CommonalityMatrix, path: str | Path) -> None:
    """Square CSV with item titles on both axes."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + [it.title for it in cm.items])
    for it, row in zip(cm.items, cm.counts):
        writer.writerow([it.title] + row)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
