from __future__ import annotations

import datetime as dt

import pytest

from speclineage.adjudication import Verdict, VerdictLog
from speclineage.corpus import Corpus, Item, SpecRecord


def make_corpus(item_specs, record_specs):
    """item_specs: (item_id, title[, iso_date]); record_specs: (item_id, annotator, text)."""
    items = []
    for spec in item_specs:
        date = dt.date.fromisoformat(spec[2]) if len(spec) > 2 and spec[2] else None
        items.append(Item(item_id=spec[0], title=spec[1], release_date=date))
    seq: dict[tuple[str, str], int] = {}
    records = []
    for item_id, annotator, text in record_specs:
        key = (item_id, annotator)
        seq[key] = seq.get(key, 0) + 1
        records.append(SpecRecord(record_id=f"{item_id}/{annotator}/{seq[key]}",
                                  item_id=item_id, raw_text=text,
                                  annotator_id=annotator, seq=seq[key]))
    return Corpus(items=items, records=records)


@pytest.fixture
def three_item_corpus():
    """Three dated items with partially overlapping spec texts."""
    return make_corpus(
        [("g1", "Alpha Quest", "1991-05-24"),
         ("g2", "Beta Story", "1993-07-30"),
         ("g3", "Gamma Farm", "1997-07-24")],
        [("g1", "a1", "メイン画面には日付が表示されている"),
         ("g1", "a1", "育成コマンドがある"),
         ("g1", "a2", "育成コマンドがある"),
         ("g1", "a2", "所持金が表示されている"),
         ("g2", "a1", "育成コマンドがある"),
         ("g2", "a1", "セーブができる"),
         ("g2", "a2", "メイン画面には日付が表示されている"),
         ("g3", "a1", "セーブができる"),
         ("g3", "a2", "モンスターを育成する")])


def kappa_fixture_log():
    """10 common pairs, 8 agreements, both annotators at 50/50 marginals.

    p_o = 0.8, p_e = 0.5, kappa = (0.8 - 0.5) / 0.5 = 0.6.
    """
    keys = [f"{i}-{i + 10}" for i in range(10)]
    a = ["similar"] * 5 + ["distinct"] * 5
    b = ["similar"] * 4 + ["distinct", "similar"] + ["distinct"] * 4
    log = VerdictLog(valid_keys=set(keys))
    for key, decision in zip(keys, a):
        log.append(Verdict(pair_key=key, decision=decision, annotator_id="ann_a",
                           timestamp="2024-01-01T00:00:00+00:00"))
    for key, decision in zip(keys, b):
        log.append(Verdict(pair_key=key, decision=decision, annotator_id="ann_b",
                           timestamp="2024-01-01T00:01:00+00:00"))
    return log


@pytest.fixture
def kappa_log():
    return kappa_fixture_log()
