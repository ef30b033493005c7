"""Agglomerative hierarchical clustering of items and of frequent spec classes.

Complete linkage merges by maximum pairwise distance; Ward linkage runs the
Lance-Williams recurrence on squared distances and reports heights as square
roots, which makes two-point merge heights equal their plain distance.

Merge candidates within 1e-9 of the step minimum count as ties and the
smallest (left, right) node-id pair wins. The recurrence and a from-scratch
recomputation round the same rational values differently by ~1e-15, so exact
float comparison would make mathematically tied merges order-dependent; the
tolerance keeps merge sequences reproducible and oracle-comparable.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass

from .errors import NumericError, UndefinedDistanceError
from .matrix import IncidenceMatrix
from .unionfind import UnionFind

logger = logging.getLogger(__name__)

METRICS = ("jaccard", "dice", "euclidean_binary")
LINKAGES = ("complete", "ward")
TIE_TOL = 1e-9
# Cut partitions are embedded in the JSON export for every k up to this size.
MAX_EMBEDDED_CUTS = 512


@dataclass
class DistanceMatrix:
    labels: list[str]
    d: list[list[float]]
    metric: str


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass
class Dendrogram:
    leaves: list[str]
    merges: list[Merge]
    metric: str = ""
    linkage: str = ""

    def leaf_order(self) -> list[int]:
        """Left-to-right leaf positions so that merges never cross."""
        n = len(self.leaves)
        children = {n + t: (m.left, m.right) for t, m in enumerate(self.merges)}
        root = n + len(self.merges) - 1 if self.merges else 0
        order: list[int] = []
        stack = [root]
        while stack:
            node = stack.pop()
            if node < n:
                order.append(node)
            else:
                left, right = children[node]
                stack.append(right)
                stack.append(left)
        return order

    def node_heights(self) -> dict[int, float]:
        n = len(self.leaves)
        heights = {i: 0.0 for i in range(n)}
        for t, m in enumerate(self.merges):
            heights[n + t] = m.height
        return heights

    def to_dict(self) -> dict:
        n = len(self.leaves)
        data = {
            "leaves": list(self.leaves),
            "merges": [{"left": m.left, "right": m.right,
                        "height": m.height, "size": m.size} for m in self.merges],
            "metric": self.metric,
            "linkage": self.linkage,
            "leaf_order": self.leaf_order(),
        }
        if n <= MAX_EMBEDDED_CUTS:
            data["cuts"] = {str(k): cut(self, k) for k in range(1, n + 1)}
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Dendrogram":
        merges = [Merge(left=int(m["left"]), right=int(m["right"]),
                        height=float(m["height"]), size=int(m["size"]))
                  for m in data["merges"]]
        return cls(leaves=list(data["leaves"]), merges=merges,
                   metric=data.get("metric", ""), linkage=data.get("linkage", ""))

    def to_newick(self) -> str:
        n = len(self.leaves)
        heights = self.node_heights()
        children = {n + t: (m.left, m.right) for t, m in enumerate(self.merges)}

        def fmt(node: int, parent_h: float) -> str:
            branch = parent_h - heights[node]
            if node < n:
                return f"{_newick_label(self.leaves[node])}:{branch!r}"
            left, right = children[node]
            inner = f"({fmt(left, heights[node])},{fmt(right, heights[node])})"
            return f"{inner}:{branch!r}"

        root = n + len(self.merges) - 1 if self.merges else 0
        if not self.merges:
            return f"{_newick_label(self.leaves[0])};"
        left, right = children[root]
        h = heights[root]
        return f"({fmt(left, h)},{fmt(right, h)});"


def _newick_label(label: str) -> str:
    return re.sub(r"[\s(),:;'\"\[\]]+", "_", label)


def _check_nonempty_sets(labels: list[str], sets: list[set], metric: str) -> None:
    if metric in ("jaccard", "dice"):
        for label, s in zip(labels, sets):
            if not s:
                raise UndefinedDistanceError(
                    f"{metric} distance undefined for {label!r}: empty feature set")


def distance_from_sets(labels: list[str], feature_sets: list[set],
                       metric: str) -> DistanceMatrix:
    """Pairwise distances between entities described by feature sets."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    _check_nonempty_sets(labels, feature_sets, metric)
    n = len(labels)
    d = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            a, b = feature_sets[i], feature_sets[j]
            inter = len(a & b)
            if metric == "jaccard":
                union = len(a | b)
                dist = 1.0 - inter / union
            elif metric == "dice":
                dist = 1.0 - 2.0 * inter / (len(a) + len(b))
            else:
                dist = math.sqrt(len(a) + len(b) - 2 * inter)
            d[i][j] = dist
            d[j][i] = dist
    return DistanceMatrix(labels=labels, d=d, metric=metric)


def _unique_labels(raw: list[str], suffixes: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for label, suffix in zip(raw, suffixes):
        if label in seen:
            out.append(f"{label} #{suffix}")
        else:
            seen[label] = 1
            out.append(label)
    return out


def distance_matrix(inc: IncidenceMatrix, axis: str, metric: str,
                    class_ids: list[int] | None = None) -> DistanceMatrix:
    """Distances between items (over class sets) or spec classes (over item sets).

    For the specs axis pass the spec_filter output; all classes are used when
    class_ids is omitted.
    """
    if axis == "items":
        if len(inc.items) < 2:
            raise ValueError("items axis requires at least two items")
        sets = inc.item_class_sets()
        labels = _unique_labels([it.title for it in inc.items],
                                [it.item_id for it in inc.items])
        return distance_from_sets(labels, [sets[it.item_id] for it in inc.items], metric)
    if axis == "specs":
        ids = class_ids if class_ids is not None else inc.class_ids()
        if len(ids) < 2:
            raise ValueError("specs axis requires at least two classes")
        item_sets = inc.class_item_sets()
        rows = inc.class_rows()
        texts = [rows[cid][0].canonical_text for cid in ids]
        labels = _unique_labels(texts, [str(cid) for cid in ids])
        return distance_from_sets(labels, [item_sets[cid] for cid in ids], metric)
    raise ValueError(f"axis must be 'items' or 'specs', got {axis!r}")


def agglomerate(dist: DistanceMatrix, linkage: str) -> Dendrogram:
    """Standard agglomerative loop with Lance-Williams distance updates."""
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    n = len(dist.labels)
    if n < 2:
        raise ValueError("clustering requires at least two entities")
    for row in dist.d:
        for v in row:
            if not math.isfinite(v):
                raise NumericError("non-finite distance in input matrix")
    ward = linkage == "ward"
    if ward and dist.metric not in ("", "euclidean_binary"):
        logger.warning("ward linkage expects euclidean_binary distances; "
                       "proceeding on squared %s distances", dist.metric)

    pair_d: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            v = float(dist.d[i][j])
            pair_d[(i, j)] = v * v if ward else v
    sizes = {i: 1 for i in range(n)}
    merges: list[Merge] = []
    for step in range(n - 1):
        dmin = min(pair_d.values())
        i, j = min(key for key, v in pair_d.items() if v <= dmin + TIE_TOL)
        dij = pair_d[(i, j)]
        height = math.sqrt(dij) if ward else dij
        new = n + step
        new_size = sizes[i] + sizes[j]
        others = [c for c in sizes if c != i and c != j]
        for c in others:
            dic = pair_d[_ordered(i, c)]
            djc = pair_d[_ordered(j, c)]
            if ward:
                si, sj, sc = sizes[i], sizes[j], sizes[c]
                v = ((si + sc) * dic + (sj + sc) * djc - sc * dij) / (si + sj + sc)
            else:
                v = dic if dic >= djc else djc
            pair_d[(c, new)] = v
        for c in others:
            del pair_d[_ordered(i, c)]
            del pair_d[_ordered(j, c)]
        del pair_d[(i, j)]
        del sizes[i]
        del sizes[j]
        sizes[new] = new_size
        merges.append(Merge(left=i, right=j, height=height, size=new_size))
    return Dendrogram(leaves=list(dist.labels), merges=merges,
                      metric=dist.metric, linkage=linkage)


def _ordered(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def cut(dend: Dendrogram, k: int) -> list[list[str]]:
    """Undo the last k-1 merges; groups labeled by their smallest member."""
    n = len(dend.leaves)
    if not 1 <= k <= n:
        raise ValueError(f"k out of range: {k} for {n} leaves")
    uf = UnionFind(n)
    rep: dict[int, int] = {i: i for i in range(n)}
    for t, m in enumerate(dend.merges[:n - k]):
        uf.union(rep[m.left], rep[m.right])
        rep[n + t] = uf.find(rep[m.left])
    groups = uf.groups()
    return [[dend.leaves[i] for i in members]
            for _, members in sorted(groups.items())]


def spec_filter(inc: IncidenceMatrix, min_items: int) -> list[int]:
    """Final classes present in at least min_items items."""
    if min_items < 1:
        raise ValueError("min_items must be >= 1")
    item_sets = inc.class_item_sets()
    return [cid for cid in sorted(item_sets) if len(item_sets[cid]) >= min_items]
