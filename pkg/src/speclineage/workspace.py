"""Workspace directory, run manifest, and stage bookkeeping.

Stages communicate through files in one workspace directory so the pipeline
can pause for human adjudication between candidate generation and equivalence
building. The manifest holds only deterministic content (params, input and
output hashes, tool version); per-run timestamps go to an append-only run log
so re-running a stage on identical inputs leaves every artifact byte-identical.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .errors import StageDependencyError, WorkspaceLockedError

CORPUS = "corpus.json"
CLASSES = "classes.jsonl"
CANDIDATES = "candidates.jsonl"
VERDICTS = "verdicts.jsonl"
EQUIVALENCE = "equivalence.json"
INCIDENCE = "incidence.csv"
COMMONALITY = "commonality.csv"
TABLES_MD = "characteristic_specs.md"
TABLES_CSV = "characteristic_specs.csv"
GENEALOGY_SVG = "genealogy.svg"
GENEALOGY_JSON = "genealogy.json"
REPORT = "report.md"
EMBED_CACHE = "embeddings_cache.json"
MANIFEST = "manifest.json"
RUNLOG = "runlog.jsonl"
LOCK = ".lock"

STAGE_OF = {
    CORPUS: "ingest",
    CLASSES: "dedup",
    CANDIDATES: "candidates",
    VERDICTS: "verdicts-import (or serve-review)",
    EQUIVALENCE: "equivalence",
    INCIDENCE: "matrix",
    COMMONALITY: "matrix",
}


def canonical_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True,
                      separators=(",", ": "), indent=2) + "\n"


def write_json(path: Path, obj) -> None:
    path.write_text(canonical_json(obj), encoding="utf-8")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.root / name

    def require(self, name: str) -> Path:
        p = self.path(name)
        if not p.exists():
            raise StageDependencyError(name, STAGE_OF.get(name, ""))
        return p

    def _lock_owner_alive(self, lock_path: Path) -> bool:
        try:
            pid = int(lock_path.read_text().strip() or "0")
        except (OSError, ValueError):
            return False
        if pid <= 0:
            return False
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return False
        except PermissionError:
            return True
        return True

    @contextmanager
    def lock(self):
        lock_path = self.path(LOCK)
        for attempt in range(2):
            try:
                fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                break
            except FileExistsError:
                # A killed process leaves its lock behind; reclaim it.
                if attempt == 0 and not self._lock_owner_alive(lock_path):
                    try:
                        lock_path.unlink()
                    except FileNotFoundError:
                        pass
                    continue
                raise WorkspaceLockedError(
                    f"workspace {self.root} is locked by another process "
                    f"(remove {lock_path} if that process is gone)") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            try:
                lock_path.unlink()
            except FileNotFoundError:
                pass

    def manifest(self) -> dict:
        p = self.path(MANIFEST)
        if not p.exists():
            return {"tool_version": __version__, "stages": {}}
        data = json.loads(p.read_text(encoding="utf-8"))
        data.setdefault("stages", {})
        return data

    def stage_token(self, stage: str, params: dict, inputs: dict[str, str]) -> str:
        body = canonical_json({"stage": stage, "params": params, "inputs": inputs})
        return hashlib.sha256(body.encode("utf-8")).hexdigest()[:16]

    def hash_inputs(self, names: list[str]) -> dict[str, str]:
        out = {}
        for name in names:
            p = Path(name)
            if not p.is_absolute():
                p = self.require(name)
            out[name] = sha256_file(p)
        return out

    def record_stage(self, stage: str, params: dict, inputs: dict[str, str],
                     outputs: list[str], started: str) -> None:
        manifest = self.manifest()
        manifest["tool_version"] = __version__
        out_hashes = {name: sha256_file(self.path(name)) for name in outputs}
        manifest["stages"][stage] = {
            "params": params,
            "inputs": inputs,
            "outputs": out_hashes,
            "token": self.stage_token(stage, params, inputs),
        }
        core = {"tool_version": manifest["tool_version"], "stages": manifest["stages"]}
        manifest["manifest_id"] = hashlib.sha256(
            canonical_json(core).encode("utf-8")).hexdigest()
        write_json(self.path(MANIFEST), manifest)
        with open(self.path(RUNLOG), "a", encoding="utf-8") as f:
            f.write(json.dumps({"stage": stage, "started": started,
                                "finished": dt.datetime.now(dt.timezone.utc).isoformat()})
                    + "\n")

    def pipeline_id(self, exclude: tuple[str, ...] = ("report",)) -> str:
        """Manifest hash over every stage except the excluded ones.

        The report embeds this instead of manifest_id so that re-running
        `report` cannot change its own bytes.
        """
        manifest = self.manifest()
        stages = {k: v for k, v in manifest.get("stages", {}).items()
                  if k not in exclude}
        core = {"tool_version": manifest.get("tool_version", __version__),
                "stages": stages}
        return hashlib.sha256(canonical_json(core).encode("utf-8")).hexdigest()

    def verify_outputs(self) -> list[str]:
        """Artifacts whose on-disk hash no longer matches the manifest."""
        mismatches = []
        for stage, entry in self.manifest().get("stages", {}).items():
            for name, recorded in entry.get("outputs", {}).items():
                p = self.path(name)
                if not p.exists():
                    mismatches.append(f"{stage}: {name} is missing")
                elif sha256_file(p) != recorded:
                    mismatches.append(f"{stage}: {name} has been modified")
        return mismatches
