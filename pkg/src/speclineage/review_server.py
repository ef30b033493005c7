"""Local review API over the candidate queue, consumed by the browser UI.

All writes funnel through one serialized appender; the verdict file is JSONL,
strictly appended and fsynced per verdict so a killed server loses nothing.

Endpoints:
  GET  /pairs/next?annotator=ID   next unjudged pair for the annotator
  POST /verdicts                  {pair_key, decision, annotator_id}
  GET  /progress[?annotator=ID]   judged/total counts
  GET  /agreement                 pairwise percent/kappa per annotator pair
  GET  /artifacts/<name>.json     exported JSON artifacts from the workspace
  GET  /...                       static UI files when --ui-dir is given
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import workspace as ws
from .adjudication import DECISIONS, Verdict, VerdictLog, agreement, utc_now
from .corpus import corpus_from_dict
from .errors import InsufficientDataError, UnknownPairError
from .normalize import load_exact_classes
from .similarity import CandidateSet
from .workspace import Workspace

logger = logging.getLogger(__name__)

_ARTIFACT_NAME = re.compile(r"^[\w.-]+\.json$")
_STATIC_TYPES = {".html": "text/html; charset=utf-8",
                 ".js": "text/javascript; charset=utf-8",
                 ".css": "text/css; charset=utf-8",
                 ".svg": "image/svg+xml",
                 ".map": "application/json"}


class ReviewState:
    """Queue of distinct candidate pairs plus the append-only verdict log."""

    def __init__(self, workspace: Workspace):
        self.workspace = workspace
        corpus = corpus_from_dict(json.loads(
            workspace.require(ws.CORPUS).read_text(encoding="utf-8")))
        classes = load_exact_classes(workspace.require(ws.CLASSES))
        candidates = CandidateSet.load_jsonl(workspace.require(ws.CANDIDATES))
        titles = {it.item_id: it.title for it in corpus.items}
        item_of_record = {r.record_id: r.item_id for r in corpus.records}
        self._class_text = [c.value for c in classes.classes]
        self._class_items: list[list[str]] = []
        for c in classes.classes:
            seen: list[str] = []
            for rid in c.source_record_ids:
                title = titles[item_of_record[rid]]
                if title not in seen:
                    seen.append(title)
            self._class_items.append(seen)
        self.queue = candidates.pair_keys()
        self.total = len(self.queue)
        self._score: dict[str, float] = {}
        for p in candidates.pairs:
            self._score.setdefault(p.key, p.score)
        self.verdict_path = workspace.path(ws.VERDICTS)
        valid = set(self.queue)
        if self.verdict_path.exists():
            self.log = VerdictLog.from_jsonl(self.verdict_path, valid_keys=valid)
        else:
            self.log = VerdictLog(valid_keys=valid)
        self._write_lock = threading.Lock()

    def _pair_view(self, key: str, annotator: str, position: int) -> dict:
        lo, _, hi = key.partition("-")
        left, right = int(lo), int(hi)
        mine = self.log.effective().get((key, annotator))
        return {
            "pair_key": key,
            "left": {"class": left, "text": self._class_text[left],
                     "items": self._class_items[left]},
            "right": {"class": right, "text": self._class_text[right],
                      "items": self._class_items[right]},
            "score": self._score[key],
            "my_verdict": mine,
            "position": position,
            "total": self.total,
        }

    def next_pair(self, annotator: str) -> dict:
        with self._write_lock:
            eff = self.log.effective()
            judged = 0
            for position, key in enumerate(self.queue):
                if (key, annotator) in eff:
                    judged += 1
                    continue
                return self._pair_view(key, annotator, position)
            return {"done": True, "judged": judged, "total": self.total}

    def submit(self, pair_key: str, decision: str, annotator: str) -> Verdict:
        if decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}")
        verdict = Verdict(pair_key=pair_key, decision=decision,
                          annotator_id=annotator, timestamp=utc_now())
        with self._write_lock:
            self.log.append(verdict)  # raises UnknownPairError on bad keys
            line = json.dumps({"pair_key": verdict.pair_key,
                               "decision": verdict.decision,
                               "annotator_id": verdict.annotator_id,
                               "timestamp": verdict.timestamp}, ensure_ascii=False)
            with open(self.verdict_path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
                os.fsync(f.fileno())
        return verdict

    def progress(self, annotator: str | None = None) -> dict:
        with self._write_lock:
            eff = self.log.effective()
        per: dict[str, int] = {}
        for key, ann in eff:
            if key in self._score:
                per[ann] = per.get(ann, 0) + 1
        out = {"total": self.total, "annotators": per}
        if annotator is not None:
            judged = per.get(annotator, 0)
            out["annotator"] = {"id": annotator, "judged": judged,
                                "remaining": self.total - judged}
        return out

    def agreement_summary(self) -> dict:
        annotators = self.log.annotators()
        pairs = []
        for i in range(len(annotators)):
            for j in range(i + 1, len(annotators)):
                try:
                    stats = agreement(self.log, annotators[i], annotators[j])
                except InsufficientDataError:
                    continue
                pairs.append({"a": annotators[i], "b": annotators[j], **stats})
        return {"pairs": pairs}


def make_handler(state: ReviewState, ui_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            logger.debug("review-api %s", fmt % args)

        def _json(self, code: int, obj) -> None:
            body = json.dumps(obj, ensure_ascii=False).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _file(self, path: Path, content_type: str) -> None:
            body = path.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            url = urlparse(self.path)
            query = parse_qs(url.query)
            if url.path == "/pairs/next":
                annotator = (query.get("annotator") or [""])[0].strip()
                if not annotator:
                    return self._json(400, {"error": "annotator is required"})
                return self._json(200, state.next_pair(annotator))
            if url.path == "/progress":
                annotator = (query.get("annotator") or [None])[0]
                return self._json(200, state.progress(annotator))
            if url.path == "/agreement":
                return self._json(200, state.agreement_summary())
            if url.path.startswith("/artifacts/"):
                name = url.path[len("/artifacts/"):]
                if not _ARTIFACT_NAME.match(name):
                    return self._json(404, {"error": f"unknown artifact {name!r}"})
                p = state.workspace.path(name)
                if not p.exists():
                    return self._json(404, {"error": f"artifact {name} not found; "
                                                     "run the producing stage first"})
                return self._file(p, "application/json; charset=utf-8")
            return self._static(url.path)

        def _static(self, path: str) -> None:
            if ui_dir is None:
                if path == "/":
                    return self._json(200, {"service": "speclineage review api",
                                            "total_pairs": state.total})
                return self._json(404, {"error": "not found"})
            rel = "index.html" if path == "/" else path.lstrip("/")
            target = (ui_dir / rel).resolve()
            if (not str(target).startswith(str(ui_dir.resolve()))
                    or not target.is_file()):
                return self._json(404, {"error": "not found"})
            return self._file(target, _STATIC_TYPES.get(target.suffix,
                                                        "application/octet-stream"))

        def do_POST(self):
            url = urlparse(self.path)
            if url.path != "/verdicts":
                return self._json(404, {"error": "not found"})
            length = int(self.headers.get("Content-Length") or 0)
            try:
                body = json.loads(self.rfile.read(length).decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                return self._json(400, {"error": "body must be JSON"})
            pair_key = body.get("pair_key")
            decision = body.get("decision")
            annotator = body.get("annotator_id")
            if not (pair_key and decision and annotator):
                return self._json(400, {"error": "pair_key, decision and "
                                                 "annotator_id are required"})
            try:
                verdict = state.submit(pair_key, decision, annotator)
            except UnknownPairError as exc:
                return self._json(404, {"error": str(exc)})
            except ValueError as exc:
                return self._json(400, {"error": str(exc)})
            return self._json(200, {"ok": True, "pair_key": verdict.pair_key,
                                    "decision": verdict.decision,
                                    "annotator_id": verdict.annotator_id,
                                    "timestamp": verdict.timestamp})

    return Handler


def make_server(workspace: Workspace, host: str = "127.0.0.1", port: int = 8765,
                ui_dir: str | Path | None = None) -> ThreadingHTTPServer:
    state = ReviewState(workspace)
    handler = make_handler(state, Path(ui_dir) if ui_dir else None)
    server = ThreadingHTTPServer((host, port), handler)
    server.review_state = state
    return server


def serve(workspace: Workspace, host: str = "127.0.0.1", port: int = 8765,
          ui_dir: str | Path | None = None) -> None:
    server = make_server(workspace, host, port, ui_dir)
    logger.info("review api on http://%s:%d/ (%d pairs)", host, port,
                server.review_state.total)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
