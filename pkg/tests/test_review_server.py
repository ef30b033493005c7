from __future__ import annotations

import json
import threading
from pathlib import Path

import pytest
import requests

from speclineage import workspace as ws
from speclineage.cli import main
from speclineage.review_server import make_server
from speclineage.workspace import Workspace

from test_workspace_cli import write_fixture_corpus

from conftest import kappa_fixture_log


@pytest.fixture
def review_workspace(tmp_path):
    """Workspace prepared through the candidates stage."""
    corpus_csv = tmp_path / "corpus.csv"
    write_fixture_corpus(corpus_csv)
    wsdir = tmp_path / "work"
    assert main(["ingest", "-w", str(wsdir), "--input", str(corpus_csv)]) == 0
    assert main(["dedup", "-w", str(wsdir)]) == 0
    assert main(["candidates", "-w", str(wsdir), "--k", "2"]) == 0
    return Workspace(wsdir)


def start(workspace, ui_dir=None):
    server = make_server(workspace, host="127.0.0.1", port=0, ui_dir=ui_dir)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    return server, base


def stop(server):
    server.shutdown()
    server.server_close()


def test_adjudication_loop(review_workspace):
    server, base = start(review_workspace)
    try:
        first = requests.get(f"{base}/pairs/next", params={"annotator": "ann_a"}).json()
        assert first["pair_key"]
        assert first["left"]["text"] != first["right"]["text"]
        assert first["left"]["items"]
        assert 0.0 <= first["score"] <= 1.0
        assert first["my_verdict"] is None
        assert first["total"] == server.review_state.total

        posted = requests.post(f"{base}/verdicts", json={
            "pair_key": first["pair_key"], "decision": "similar",
            "annotator_id": "ann_a"}).json()
        assert posted["ok"] is True

        second = requests.get(f"{base}/pairs/next", params={"annotator": "ann_a"}).json()
        assert second["pair_key"] != first["pair_key"]

        progress = requests.get(f"{base}/progress",
                                params={"annotator": "ann_a"}).json()
        assert progress["annotator"]["judged"] == 1
        assert progress["annotator"]["remaining"] == progress["total"] - 1
    finally:
        stop(server)


def test_undo_supersedes_and_queue_is_per_annotator(review_workspace):
    server, base = start(review_workspace)
    try:
        first = requests.get(f"{base}/pairs/next", params={"annotator": "ann_a"}).json()
        for decision in ("similar", "distinct"):
            requests.post(f"{base}/verdicts", json={
                "pair_key": first["pair_key"], "decision": decision,
                "annotator_id": "ann_a"})
        state = server.review_state
        assert state.log.effective()[(first["pair_key"], "ann_a")] == "distinct"
        other = requests.get(f"{base}/pairs/next", params={"annotator": "ann_b"}).json()
        assert other["pair_key"] == first["pair_key"]
    finally:
        stop(server)


def test_unknown_pair_and_bad_decision(review_workspace):
    server, base = start(review_workspace)
    try:
        bad_key = requests.post(f"{base}/verdicts", json={
            "pair_key": "zz", "decision": "similar", "annotator_id": "a"})
        assert bad_key.status_code == 404
        bad_decision = requests.post(f"{base}/verdicts", json={
            "pair_key": server.review_state.queue[0], "decision": "meh",
            "annotator_id": "a"})
        assert bad_decision.status_code == 400
        missing = requests.get(f"{base}/pairs/next")
        assert missing.status_code == 400
    finally:
        stop(server)


def test_verdicts_survive_server_restart(review_workspace):
    server, base = start(review_workspace)
    key = server.review_state.queue[0]
    requests.post(f"{base}/verdicts", json={
        "pair_key": key, "decision": "similar", "annotator_id": "ann_a"})
    stop(server)

    server2, base2 = start(review_workspace)
    try:
        progress = requests.get(f"{base2}/progress",
                                params={"annotator": "ann_a"}).json()
        assert progress["annotator"]["judged"] == 1
        nxt = requests.get(f"{base2}/pairs/next", params={"annotator": "ann_a"}).json()
        assert nxt["pair_key"] != key
    finally:
        stop(server2)


def test_completion_and_agreement_summary(review_workspace):
    server, base = start(review_workspace)
    try:
        state = server.review_state
        for key in state.queue:
            for annotator in ("ann_a", "ann_b"):
                requests.post(f"{base}/verdicts", json={
                    "pair_key": key, "decision": "similar",
                    "annotator_id": annotator})
        done = requests.get(f"{base}/pairs/next", params={"annotator": "ann_a"}).json()
        assert done == {"done": True, "judged": state.total, "total": state.total}
        summary = requests.get(f"{base}/agreement").json()
        assert summary["pairs"][0]["percent"] == 1.0
        assert summary["pairs"][0]["kappa"] == 1.0
    finally:
        stop(server)


def test_agreement_endpoint_matches_kappa_fixture(tmp_path):
    # a corpus rich enough for at least 10 distinct candidate pairs
    corpus_csv = tmp_path / "corpus.csv"
    rows = ["item_id,title,release_date,annotator_id,spec_text"]
    for i in range(14):
        rows.append(f"g1,Game One,1991-01-01,a1,unique rule number {i} with words")
        rows.append(f"g1,Game One,1991-01-01,a2,unique rule number {i} with words")
    corpus_csv.write_text("\n".join(rows) + "\n", encoding="utf-8")
    wsdir = tmp_path / "work"
    assert main(["ingest", "-w", str(wsdir), "--input", str(corpus_csv)]) == 0
    assert main(["dedup", "-w", str(wsdir)]) == 0
    assert main(["candidates", "-w", str(wsdir), "--k", "2"]) == 0

    server, base = start(Workspace(wsdir))
    try:
        state = server.review_state
        assert len(state.queue) >= 10
        state_keys = state.queue[:10]
        # replay the hand-computed fixture onto real pair keys
        fixture = kappa_fixture_log()
        for entry, key in zip(fixture.entries, state_keys * 2):
            requests.post(f"{base}/verdicts", json={
                "pair_key": key, "decision": entry.decision,
                "annotator_id": entry.annotator_id})
        summary = requests.get(f"{base}/agreement").json()
        row = summary["pairs"][0]
        assert row["n"] == 10
        assert row["percent"] == pytest.approx(0.8)
        assert row["kappa"] == pytest.approx(0.6)
    finally:
        stop(server)


def test_artifact_endpoint(review_workspace):
    layout = {"nodes": [{"id": "g1", "title": "Game 1", "weight": 3, "x": 0}],
              "ribbons": []}
    review_workspace.path(ws.GENEALOGY_JSON).write_text(json.dumps(layout),
                                                        encoding="utf-8")
    server, base = start(review_workspace)
    try:
        got = requests.get(f"{base}/artifacts/genealogy.json").json()
        assert got == layout
        missing = requests.get(f"{base}/artifacts/nope.json")
        assert missing.status_code == 404
        assert "stage" in missing.json()["error"]
        traversal = requests.get(f"{base}/artifacts/..%2Fsecret.json")
        assert traversal.status_code == 404
    finally:
        stop(server)


def test_static_ui_serving(review_workspace, tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>review</body></html>",
                                   encoding="utf-8")
    (ui / "app.js").write_text("console.log('ok')", encoding="utf-8")
    server, base = start(review_workspace, ui_dir=ui)
    try:
        index = requests.get(f"{base}/")
        assert index.status_code == 200
        assert "review" in index.text
        js = requests.get(f"{base}/app.js")
        assert js.headers["Content-Type"].startswith("text/javascript")
        assert requests.get(f"{base}/../etc/passwd").status_code == 404
    finally:
        stop(server)


def test_requires_candidates_stage(tmp_path):
    wsdir = tmp_path / "w"
    wsdir.mkdir()
    with pytest.raises(Exception, match="corpus.json"):
        make_server(Workspace(wsdir))
