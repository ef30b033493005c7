"""SVG renderers for the genealogy ribbon chart, dendrograms, and profiles.

Rendering is presentation-only: every SVG carries a data-only JSON twin (or
data-* attributes) encoding the same node/ribbon/bar values, and output is
deterministic byte for byte for a given input.
"""

from __future__ import annotations

import logging

from .clustering import Dendrogram
from .corpus import Item
from .errors import OrderingError, UnknownItemError
from .matrix import CommonalityMatrix

logger = logging.getLogger(__name__)

_SVG_HEAD = ('<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
             'width="{w}" height="{h}" viewBox="0 0 {w} {h}">')


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _f(x: float) -> str:
    return f"{x:.2f}"


def chronological_order(items: list[Item],
                        explicit_order: list[str] | None = None) -> list[Item]:
    """Items by release date; an explicit id order overrides and rescues undated sets."""
    if explicit_order is not None:
        by_id = {it.item_id: it for it in items}
        missing = [iid for iid in explicit_order if iid not in by_id]
        if missing or len(explicit_order) != len(items):
            raise OrderingError(f"explicit order does not match items: {missing}")
        return [by_id[iid] for iid in explicit_order]
    undated = [it.item_id for it in items if it.release_date is None]
    if undated:
        raise OrderingError(
            f"items without release dates need an explicit order: {undated}")
    return [it for _, it in sorted(enumerate(items),
                                   key=lambda p: (p[1].release_date, p[0]))]


def genealogy_layout(cm: CommonalityMatrix, min_edge: int = 1,
                     node_weight: str = "sum",
                     explicit_order: list[str] | None = None) -> dict:
    """Data-only form: nodes in chronological order plus ribbons above min_edge.

    Node weight is the sum of the item's pairwise commonalities by default;
    node_weight="max" switches to the largest incident ribbon width.
    """
    order = chronological_order(cm.items, explicit_order)
    pos = {it.item_id: cm.index_of(it.item_id) for it in order}
    nodes = []
    for x, it in enumerate(order):
        i = pos[it.item_id]
        off_diag = [cm.counts[i][j] for j in range(len(cm.items)) if j != i]
        weight = max(off_diag, default=0) if node_weight == "max" else sum(off_diag)
        nodes.append({"id": it.item_id, "title": it.title, "weight": weight, "x": x})
    ribbons = []
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            width = cm.counts[pos[order[a].item_id]][pos[order[b].item_id]]
            if width > 0 and width >= min_edge:
                ribbons.append({"from": order[a].item_id, "to": order[b].item_id,
                                "width": width})
    if not ribbons and any(
            cm.counts[i][j] > 0 for i in range(len(cm.items))
            for j in range(i + 1, len(cm.items))):
        logger.warning("min_edge=%d is above the largest commonality; no ribbons",
                       min_edge)
    return {"nodes": nodes, "ribbons": ribbons}


def render_genealogy(cm: CommonalityMatrix, min_edge: int = 1,
                     node_weight: str = "sum",
                     explicit_order: list[str] | None = None) -> tuple[str, dict]:
    """Chronological ribbon chart; returns (svg, data-only layout dict)."""
    layout = genealogy_layout(cm, min_edge=min_edge, node_weight=node_weight,
                              explicit_order=explicit_order)
    nodes = layout["nodes"]
    ribbons = layout["ribbons"]
    col = 110.0
    margin = 60.0
    plot_h = 360.0
    width = margin * 2 + col * max(len(nodes) - 1, 1)
    height = plot_h + 150.0
    max_weight = max((n["weight"] for n in nodes), default=0) or 1
    max_ribbon = max((r["width"] for r in ribbons), default=0) or 1
    xs = {n["id"]: margin + col * n["x"] for n in nodes}
    bar_h = {n["id"]: max(4.0, plot_h * n["weight"] / max_weight) for n in nodes}
    mid_y = 40.0 + plot_h / 2
    out = [_SVG_HEAD.format(w=_f(width), h=_f(height))]
    out.append(f'<title>spec genealogy</title>')
    for r in ribbons:
        x1, x2 = xs[r["from"]], xs[r["to"]]
        stroke = max(1.0, 18.0 * r["width"] / max_ribbon)
        ctrl = (x1 + x2) / 2
        out.append(
            f'<path d="M {_f(x1)} {_f(mid_y)} C {_f(ctrl)} {_f(mid_y - 60)}, '
            f'{_f(ctrl)} {_f(mid_y - 60)}, {_f(x2)} {_f(mid_y)}" fill="none" '
            f'stroke="#7aa6c2" stroke-opacity="0.55" stroke-width="{_f(stroke)}" '
            f'data-from="{_esc(r["from"])}" data-to="{_esc(r["to"])}" '
            f'data-width="{r["width"]}"/>')
    for n in nodes:
        x = xs[n["id"]]
        h = bar_h[n["id"]]
        y = mid_y - h / 2
        out.append(
            f'<rect x="{_f(x - 7)}" y="{_f(y)}" width="14" height="{_f(h)}" '
            f'fill="#2b5876" data-id="{_esc(n["id"])}" data-weight="{n["weight"]}"/>')
        out.append(
            f'<text x="{_f(x)}" y="{_f(plot_h + 70)}" font-size="10" '
            f'text-anchor="start" transform="rotate(45 {_f(x)} {_f(plot_h + 70)})">'
            f'{_esc(n["title"])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n", layout


def render_dendrogram(dend: Dendrogram) -> str:
    """Leaves down the left axis in dendrogram order, merge heights rightward."""
    n = len(dend.leaves)
    order = dend.leaf_order()
    heights = dend.node_heights()
    row_h = 22.0
    label_w = 220.0
    plot_w = 420.0
    width = label_w + plot_w + 40.0
    height = row_h * n + 60.0
    max_h = max((m.height for m in dend.merges), default=1.0) or 1.0
    x_of = {node: label_w + plot_w * heights[node] / max_h
            for node in heights}
    y_of: dict[int, float] = {}
    for rank, leaf in enumerate(order):
        y_of[leaf] = 40.0 + row_h * rank
    out = [_SVG_HEAD.format(w=_f(width), h=_f(height))]
    out.append("<title>dendrogram</title>")
    for rank, leaf in enumerate(order):
        out.append(f'<text x="{_f(label_w - 8)}" y="{_f(y_of[leaf] + 4)}" '
                   f'font-size="11" text-anchor="end">{_esc(dend.leaves[leaf])}</text>')
    for t, m in enumerate(dend.merges):
        node = n + t
        x = x_of[node]
        yl, yr = y_of[m.left], y_of[m.right]
        out.append(f'<path d="M {_f(x_of[m.left])} {_f(yl)} H {_f(x)} '
                   f'V {_f(yr)} H {_f(x_of[m.right])}" fill="none" '
                   f'stroke="#333" stroke-width="1.2" data-height="{m.height!r}"/>')
        y_of[node] = (yl + yr) / 2
    out.append(f'<line x1="{_f(label_w)}" y1="{_f(height - 18)}" '
               f'x2="{_f(label_w + plot_w)}" y2="{_f(height - 18)}" stroke="#999"/>')
    out.append(f'<text x="{_f(label_w)}" y="{_f(height - 4)}" font-size="9">0</text>')
    out.append(f'<text x="{_f(label_w + plot_w)}" y="{_f(height - 4)}" font-size="9" '
               f'text-anchor="end">{max_h!r}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def profile_layout(item_id: str, cm: CommonalityMatrix) -> dict:
    """Shared-class counts between one item and every other, in matrix order."""
    ids = [it.item_id for it in cm.items]
    if item_id not in ids:
        raise UnknownItemError(f"unknown item {item_id!r}")
    i = cm.index_of(item_id)
    bars = [{"item_id": it.item_id, "title": it.title, "value": cm.counts[i][j]}
            for j, it in enumerate(cm.items) if j != i]
    return {"item": item_id, "title": cm.items[i].title, "bars": bars}


def render_profile(item_id: str, cm: CommonalityMatrix) -> tuple[str, dict]:
    """Horizontal bar per other item; returns (svg, data-only layout dict)."""
    layout = profile_layout(item_id, cm)
    bars = layout["bars"]
    row_h = 20.0
    label_w = 220.0
    plot_w = 360.0
    width = label_w + plot_w + 60.0
    height = row_h * max(len(bars), 1) + 60.0
    max_v = max((b["value"] for b in bars), default=0) or 1
    out = [_SVG_HEAD.format(w=_f(width), h=_f(height))]
    out.append(f"<title>shared specs: {_esc(layout['title'])}</title>")
    for rank, b in enumerate(bars):
        y = 30.0 + row_h * rank
        w = plot_w * b["value"] / max_v
        out.append(f'<text x="{_f(label_w - 8)}" y="{_f(y + 11)}" font-size="11" '
                   f'text-anchor="end">{_esc(b["title"])}</text>')
        out.append(f'<rect x="{_f(label_w)}" y="{_f(y)}" width="{_f(w)}" '
                   f'height="14" fill="#2b5876" data-item="{_esc(b["item_id"])}" '
                   f'data-value="{b["value"]}"/>')
        out.append(f'<text x="{_f(label_w + w + 6)}" y="{_f(y + 11)}" '
                   f'font-size="10">{b["value"]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n", layout
