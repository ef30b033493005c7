"""Human similar/distinct verdicts, inter-coder agreement, equivalence classes.

The verdict log is append-only: a later verdict by the same annotator on the
same pair supersedes the earlier one, but nothing is ever rewritten. "unsure"
verdicts contribute no merge edge and never block one.

Final equivalence classes are the connected components over exact classes,
with one edge per candidate pair whose effective verdicts satisfy the policy:

* ``any_similar``: at least one annotator says similar and none says distinct.
* ``all_similar``: every judging (non-unsure) annotator says similar.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InsufficientDataError, UnknownPairError
from .normalize import ExactClasses
from .unionfind import UnionFind

DECISIONS = ("similar", "distinct", "unsure")
POLICIES = ("any_similar", "all_similar")


def utc_now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


@dataclass(frozen=True)
class Verdict:
    pair_key: str
    decision: str
    annotator_id: str
    timestamp: str

    def __post_init__(self):
        if self.decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}, got {self.decision!r}")


@dataclass
class VerdictLog:
    """Append-only verdict list, validated against the active candidate set."""

    valid_keys: set[str] | None = None
    entries: list[Verdict] = field(default_factory=list)

    def append(self, verdict: Verdict) -> None:
        if self.valid_keys is not None and verdict.pair_key not in self.valid_keys:
            raise UnknownPairError(f"unknown pair_key {verdict.pair_key!r}")
        self.entries.append(verdict)

    def effective(self) -> dict[tuple[str, str], str]:
        """Last decision per (pair_key, annotator)."""
        out: dict[tuple[str, str], str] = {}
        for v in self.entries:
            out[(v.pair_key, v.annotator_id)] = v.decision
        return out

    def effective_by_pair(self) -> dict[str, dict[str, str]]:
        out: dict[str, dict[str, str]] = {}
        for (key, annotator), decision in self.effective().items():
            out.setdefault(key, {})[annotator] = decision
        return out

    def annotators(self) -> list[str]:
        seen: list[str] = []
        for v in self.entries:
            if v.annotator_id not in seen:
                seen.append(v.annotator_id)
        return seen

    def to_jsonl(self, path: str | Path) -> None:
        lines = [json.dumps({"pair_key": v.pair_key, "decision": v.decision,
                             "annotator_id": v.annotator_id, "timestamp": v.timestamp},
                            ensure_ascii=False)
                 for v in self.entries]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, path: str | Path,
                   valid_keys: set[str] | None = None) -> "VerdictLog":
        log = cls(valid_keys=valid_keys)
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            log.append(Verdict(pair_key=obj["pair_key"], decision=obj["decision"],
                               annotator_id=obj["annotator_id"],
                               timestamp=obj.get("timestamp", "")))
        return log


def record_verdict(log: VerdictLog, pair_key: str, decision: str,
                   annotator_id: str, timestamp: str | None = None) -> VerdictLog:
    """Append one verdict; resubmission by the same annotator supersedes."""
    log.append(Verdict(pair_key=pair_key, decision=decision,
                       annotator_id=annotator_id,
                       timestamp=timestamp or utc_now()))
    return log


def agreement(log: VerdictLog, annotator_a: str, annotator_b: str) -> dict:
    """Percent agreement and Cohen's kappa over commonly judged pairs.

    "unsure" verdicts are excluded; expected agreement uses each annotator's
    marginal similar/distinct rates over the common pairs.
    """
    eff = log.effective()
    a_dec = {key: d for (key, ann), d in eff.items()
             if ann == annotator_a and d != "unsure"}
    b_dec = {key: d for (key, ann), d in eff.items()
             if ann == annotator_b and d != "unsure"}
    common = sorted(set(a_dec) & set(b_dec))
    n = len(common)
    if n == 0:
        raise InsufficientDataError(
            f"no commonly judged pairs for {annotator_a!r} and {annotator_b!r}")
    matches = sum(1 for key in common if a_dec[key] == b_dec[key])
    p_o = matches / n
    pa_sim = sum(1 for key in common if a_dec[key] == "similar") / n
    pb_sim = sum(1 for key in common if b_dec[key] == "similar") / n
    p_e = pa_sim * pb_sim + (1 - pa_sim) * (1 - pb_sim)
    if p_e == 1.0:
        kappa = 1.0 if p_o == 1.0 else 0.0
    else:
        kappa = (p_o - p_e) / (1 - p_e)
    return {"percent": p_o, "kappa": kappa, "n": n}


@dataclass
class EquivalenceClasses:
    """Final partition of records; refines-or-equals the exact partition."""

    class_of: dict[str, int]
    members: dict[int, list[str]]
    exact_positions: dict[int, list[int]]

    def class_count(self) -> int:
        return len(self.members)

    def class_ids(self) -> list[int]:
        return sorted(self.members)

    def to_dict(self) -> dict:
        return {"class_of": self.class_of,
                "members": {str(cid): rids for cid, rids in self.members.items()},
                "exact_positions": {str(cid): pos for cid, pos in self.exact_positions.items()}}

    @classmethod
    def from_dict(cls, data: dict) -> "EquivalenceClasses":
        return cls(class_of={rid: int(cid) for rid, cid in data["class_of"].items()},
                   members={int(cid): list(rids) for cid, rids in data["members"].items()},
                   exact_positions={int(cid): [int(p) for p in pos]
                                    for cid, pos in data["exact_positions"].items()})


def _edge_accepted(decisions: dict[str, str], policy: str) -> bool:
    judging = [d for d in decisions.values() if d != "unsure"]
    if not judging:
        return False
    if policy == "any_similar":
        return "similar" in judging and "distinct" not in judging
    return all(d == "similar" for d in judging)


def build_equivalence(exact: ExactClasses, log: VerdictLog,
                      policy: str = "any_similar") -> EquivalenceClasses:
    """Union exact classes along accepted similarity edges (transitive closure)."""
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}, got {policy!r}")
    n = len(exact)
    uf = UnionFind(n)
    for key, decisions in log.effective_by_pair().items():
        if not _edge_accepted(decisions, policy):
            continue
        lo_s, _, hi_s = key.partition("-")
        lo, hi = int(lo_s), int(hi_s)
        if not (0 <= lo < n and 0 <= hi < n):
            raise UnknownPairError(f"pair_key {key!r} does not resolve against "
                                   f"{n} exact classes")
        uf.union(lo, hi)
    groups = uf.groups()
    class_of: dict[str, int] = {}
    members: dict[int, list[str]] = {}
    exact_positions: dict[int, list[int]] = {}
    for cid, positions in groups.items():
        rids: list[str] = []
        for pos in positions:
            rids.extend(exact.classes[pos].source_record_ids)
        members[cid] = rids
        exact_positions[cid] = positions
        for rid in rids:
            class_of[rid] = cid
    return EquivalenceClasses(class_of=class_of, members=members,
                              exact_positions=exact_positions)
