"""Per-group frequent-spec tables at configurable support thresholds.

A class appears in a group's table when it is held by at least
ceil(threshold * group_size) of the group's items ("n of m items or more"
semantics). Category labels are never inferred; they come from an optional
annotation file (CSV ``class_id,category``).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import InputFormatError, UnknownItemError
from .matrix import IncidenceMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupSpecRow:
    class_id: int
    representative_text: str
    support_count: int
    support_fraction: float
    category: str | None = None


@dataclass
class GroupSpecTable:
    group_id: str
    members: list[str]
    rows: list[GroupSpecRow]
    threshold: float


def support_cutoff(threshold: float, group_size: int) -> int:
    """Smallest count satisfying the threshold fraction of the group.

    The epsilon guards against float products like 0.3 * 10 landing a hair
    above the integer and inflating the cutoff.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    return max(1, math.ceil(threshold * group_size - 1e-9))


def group_spec_table(groups: dict[str, list[str]], inc: IncidenceMatrix,
                     threshold: float,
                     categories: dict[int, str] | None = None) -> list[GroupSpecTable]:
    """Frequent classes per group, sorted by support desc then text."""
    known = set(inc.item_ids())
    item_sets = inc.item_class_sets()
    reps = representative_texts(inc)
    tables: list[GroupSpecTable] = []
    for group_id, members in groups.items():
        if not members:
            logger.warning("group %r is empty; skipped", group_id)
            continue
        for item_id in members:
            if item_id not in known:
                raise UnknownItemError(f"group {group_id!r} names unknown item {item_id!r}")
        cutoff = support_cutoff(threshold, len(members))
        support: dict[int, int] = {}
        for item_id in members:
            for cid in item_sets[item_id]:
                support[cid] = support.get(cid, 0) + 1
        rows = [GroupSpecRow(class_id=cid, representative_text=reps[cid],
                             support_count=count,
                             support_fraction=count / len(members),
                             category=(categories or {}).get(cid))
                for cid, count in support.items() if count >= cutoff]
        rows.sort(key=lambda r: (-r.support_count, r.representative_text))
        tables.append(GroupSpecTable(group_id=group_id, members=list(members),
                                     rows=rows, threshold=threshold))
    return tables


def representative_texts(inc: IncidenceMatrix) -> dict[int, str]:
    """Most frequent raw text per class; ties go to the earliest occurrence."""
    counts: dict[int, dict[str, int]] = {}
    first_seen: dict[int, dict[str, int]] = {}
    for pos, row in enumerate(inc.rows):
        by_text = counts.setdefault(row.class_id, {})
        by_text[row.raw_text] = by_text.get(row.raw_text, 0) + 1
        first_seen.setdefault(row.class_id, {}).setdefault(row.raw_text, pos)
    return {cid: min(by_text, key=lambda t: (-by_text[t], first_seen[cid][t]))
            for cid, by_text in counts.items()}


def load_groups_csv(path: str | Path) -> dict[str, list[str]]:
    """CSV ``item_id,group``; group order follows first appearance."""
    groups: dict[str, list[str]] = {}
    reader = csv.reader(io.StringIO(Path(path).read_text(encoding="utf-8-sig")))
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and [c.strip().lower() for c in row[:2]] == ["item_id", "group"]:
            continue
        if len(row) < 2:
            raise InputFormatError(f"groups file line {lineno}: expected item_id,group")
        groups.setdefault(row[1].strip(), []).append(row[0].strip())
    return groups


def load_categories_csv(path: str | Path) -> dict[int, str]:
    """CSV ``class_id,category``."""
    out: dict[int, str] = {}
    reader = csv.reader(io.StringIO(Path(path).read_text(encoding="utf-8-sig")))
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if lineno == 1 and [c.strip().lower() for c in row[:2]] == ["class_id", "category"]:
            continue
        if len(row) < 2:
            raise InputFormatError(f"categories file line {lineno}: expected class_id,category")
        try:
            out[int(row[0])] = row[1].strip()
        except ValueError:
            raise InputFormatError(f"categories file line {lineno}: bad class_id") from None
    return out


def tables_to_markdown(tables: list[GroupSpecTable]) -> str:
    parts: list[str] = []
    for table in tables:
        parts.append(f"## Group {table.group_id}")
        parts.append(f"Members ({len(table.members)}): " + ", ".join(table.members))
        parts.append(f"Threshold: {table.threshold} "
                     f"(support >= {support_cutoff(table.threshold, len(table.members))})")
        parts.append("")
        has_cat = any(r.category for r in table.rows)
        if has_cat:
            parts.append("| category | spec | support | fraction |")
            parts.append("| --- | --- | ---: | ---: |")
            for r in table.rows:
                parts.append(f"| {r.category or ''} | {r.representative_text} "
                             f"| {r.support_count} | {r.support_fraction:.2f} |")
        else:
            parts.append("| spec | support | fraction |")
            parts.append("| --- | ---: | ---: |")
            for r in table.rows:
                parts.append(f"| {r.representative_text} | {r.support_count} "
                             f"| {r.support_fraction:.2f} |")
        parts.append("")
    return "\n".join(parts)


def tables_to_csv(tables: list[GroupSpecTable], path: str | Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group", "class_id", "category", "spec",
                     "support_count", "support_fraction"])
    for table in tables:
        for r in table.rows:
            writer.writerow([table.group_id, r.class_id, r.category or "",
                             r.representative_text, r.support_count,
                             f"{r.support_fraction:.6f}"])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
