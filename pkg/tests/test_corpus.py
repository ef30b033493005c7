from __future__ import annotations

import json

import pytest

from speclineage.corpus import (CSV_FIELDS, load_corpus, ordered_items,
                                save_corpus, validate)
from speclineage.errors import CorpusValidationError, InputFormatError

from conftest import make_corpus

CSV_HEADER = ",".join(CSV_FIELDS)


def write_csv(tmp_path, rows, name="corpus.csv"):
    path = tmp_path / name
    path.write_text(CSV_HEADER + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return path


def test_load_two_items_three_records(tmp_path):
    path = write_csv(tmp_path, [
        "g1,Alpha,1991-05-24,a1,First rule",
        "g1,Alpha,1991-05-24,a1,Second rule",
        "g2,Beta,1993-07-30,a1,Third rule",
    ])
    corpus = load_corpus(path, "csv")
    assert len(corpus.items) == 2
    assert len(corpus.records) == 3
    assert corpus.records[0].record_id == "g1/a1/1"
    assert corpus.records[1].seq == 2
    assert corpus.item("g2").release_date.isoformat() == "1993-07-30"


def test_records_keep_file_order(tmp_path):
    path = write_csv(tmp_path, [
        "g1,Alpha,,a1,rule one",
        "g2,Beta,,a1,rule two",
        "g1,Alpha,,a2,rule three",
        "g1,Alpha,,a1,rule four",
    ])
    corpus = load_corpus(path, "csv")
    assert [r.raw_text for r in corpus.records] == [
        "rule one", "rule two", "rule three", "rule four"]
    assert [r.record_id for r in corpus.records] == [
        "g1/a1/1", "g2/a1/1", "g1/a2/1", "g1/a1/2"]


def test_unknown_item_reference_cites_id(tmp_path):
    path = tmp_path / "corpus.jsonl"
    lines = [
        {"item_id": "g1", "title": "Alpha", "release_date": "",
         "annotator_id": "a1", "spec_text": "rule"},
        {"item_id": "X", "title": "", "release_date": "",
         "annotator_id": "a1", "spec_text": "orphan rule"},
    ]
    path.write_text("\n".join(json.dumps(l) for l in lines), encoding="utf-8")
    with pytest.raises(CorpusValidationError, match="'X'"):
        load_corpus(path, "jsonl")


def test_empty_spec_text_names_location(tmp_path):
    path = write_csv(tmp_path, [
        "g1,Alpha,,a1,ok rule",
        'g1,Alpha,,a1,"   "',
    ])
    with pytest.raises(CorpusValidationError, match="corpus.csv:3"):
        load_corpus(path, "csv")


def test_parse_failure_names_line(tmp_path):
    path = write_csv(tmp_path, ["g1,Alpha,,a1,ok", "only,two"])
    with pytest.raises(InputFormatError, match=":3"):
        load_corpus(path, "csv")
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"item_id": "g1"\n', encoding="utf-8")
    with pytest.raises(InputFormatError, match="bad.jsonl:1"):
        load_corpus(bad, "jsonl")


def test_bad_header_rejected(tmp_path):
    path = tmp_path / "corpus.csv"
    path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
    with pytest.raises(InputFormatError, match="expected header"):
        load_corpus(path, "csv")


def test_load_is_deterministic(tmp_path):
    path = write_csv(tmp_path, [
        "g1,Alpha,1991-05-24,a1,rule one",
        "g2,Beta,,a2,rule two",
    ])
    assert load_corpus(path, "csv") == load_corpus(path, "csv")


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_round_trip(tmp_path, fmt):
    path = write_csv(tmp_path, [
        'g1,Alpha,1991-05-24,a1,"rule, with comma"',
        "g1,Alpha,1991-05-24,a2,rule two",
        "g2,Beta,,a1,rule 三",
    ])
    corpus = load_corpus(path, "csv")
    out = tmp_path / f"out.{fmt}"
    save_corpus(corpus, out, fmt)
    assert load_corpus(out, fmt) == corpus


def test_validate_clean_corpus_is_empty_report():
    corpus = make_corpus(
        [("g1", "Alpha"), ("g2", "Beta")],
        [("g1", "a1", "r1"), ("g1", "a2", "r2"),
         ("g2", "a1", "r3"), ("g2", "a2", "r4")])
    report = validate(corpus)
    assert report.ok()
    assert report.lines() == []


def test_validate_flags_single_annotator():
    corpus = make_corpus([("g1", "Alpha")], [("g1", "a1", "r1"), ("g1", "a1", "r2")])
    report = validate(corpus)
    assert report.single_annotator_items == ["g1"]
    assert not report.ok()


def test_validate_flags_duplicate_record_ids():
    corpus = make_corpus([("g1", "Alpha")], [("g1", "a1", "r1")])
    corpus.records.append(corpus.records[0])
    report = validate(corpus)
    assert report.duplicate_record_ids == ["g1/a1/1"]


def test_validate_flags_item_without_records():
    corpus = make_corpus([("g1", "Alpha"), ("g2", "Beta")],
                         [("g1", "a1", "r1"), ("g1", "a2", "r2")])
    assert validate(corpus).items_without_records == ["g2"]


def test_ordered_items_by_date_then_input_order():
    dated = make_corpus(
        [("g2", "Beta", "1993-07-30"), ("g1", "Alpha", "1991-05-24")],
        [("g1", "a1", "r"), ("g2", "a1", "r")])
    assert [it.item_id for it in ordered_items(dated)] == ["g1", "g2"]
    mixed = make_corpus(
        [("g2", "Beta", "1993-07-30"), ("g1", "Alpha")],
        [("g1", "a1", "r"), ("g2", "a1", "r")])
    assert [it.item_id for it in ordered_items(mixed)] == ["g2", "g1"]
