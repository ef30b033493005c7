/** Genealogy ribbon view with a live min-edge slider over the exported layout. */

import type { GenealogyLayout, GenealogyRibbon } from '../types';

export function maxRibbonWidth(layout: GenealogyLayout): number {
  return layout.ribbons.reduce((acc, r) => Math.max(acc, r.width), 0);
}

export function filterRibbons(layout: GenealogyLayout, minEdge: number): GenealogyRibbon[] {
  return layout.ribbons.filter((r) => r.width >= minEdge);
}

const esc = (s: string) =>
  s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');

const f2 = (x: number) => x.toFixed(2);

export function renderGenealogy(layout: GenealogyLayout, minEdge: number): string {
  const nodes = layout.nodes;
  const ribbons = filterRibbons(layout, minEdge);
  const col = 110;
  const margin = 60;
  const plotH = 360;
  const width = margin * 2 + col * Math.max(nodes.length - 1, 1);
  const height = plotH + 150;
  const maxWeight = Math.max(...nodes.map((n) => n.weight), 1);
  const maxWidth = Math.max(maxRibbonWidth(layout), 1);
  const xs = new Map(nodes.map((n) => [n.id, margin + col * n.x]));
  const midY = 40 + plotH / 2;

  const out: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" data-min-edge="${minEdge}">`,
  ];
  for (const r of ribbons) {
    const x1 = xs.get(r.from)!;
    const x2 = xs.get(r.to)!;
    const stroke = Math.max(1, (18 * r.width) / maxWidth);
    const ctrl = (x1 + x2) / 2;
    out.push(
      `<path d="M ${f2(x1)} ${f2(midY)} C ${f2(ctrl)} ${f2(midY - 60)}, ` +
      `${f2(ctrl)} ${f2(midY - 60)}, ${f2(x2)} ${f2(midY)}" fill="none" ` +
      `stroke="#7aa6c2" stroke-opacity="0.55" stroke-width="${f2(stroke)}" ` +
      `data-from="${esc(r.from)}" data-to="${esc(r.to)}" data-width="${r.width}"/>`,
    );
  }
  for (const n of nodes) {
    const x = xs.get(n.id)!;
    const h = Math.max(4, (plotH * n.weight) / maxWeight);
    out.push(
      `<rect x="${f2(x - 7)}" y="${f2(midY - h / 2)}" width="14" height="${f2(h)}" ` +
      `fill="#2b5876" data-id="${esc(n.id)}" data-weight="${n.weight}"/>`,
      `<text x="${f2(x)}" y="${f2(plotH + 70)}" font-size="10" text-anchor="start" ` +
      `transform="rotate(45 ${f2(x)} ${f2(plotH + 70)})">${esc(n.title)}</text>`,
    );
  }
  out.push('</svg>');
  return out.join('\n');
}
