/** Dendrogram explorer: cut-level slider recolors groups live.
 *
 * Groupings are read from the artifact's server-exported cut table; the
 * browser does no clustering of its own.
 */

import type { DendrogramArtifact } from '../types';

export const GROUP_COLORS = [
  '#2b5876', '#b3532c', '#4a7c44', '#7a4a8f', '#9c8312',
  '#2c7f8a', '#a1435f', '#5b5e91', '#6b6b6b', '#3d8c6e',
];

export function maxCut(artifact: DendrogramArtifact): number {
  return artifact.leaves.length;
}

/** Leaf groups at cut level k, exactly as the pipeline exported them. */
export function cutGroups(artifact: DendrogramArtifact, k: number): string[][] {
  const cuts = artifact.cuts;
  if (!cuts || !cuts[String(k)]) {
    throw new Error(
      `dendrogram artifact has no cut table for k=${k}; re-run the cluster stage`,
    );
  }
  return cuts[String(k)];
}

export function groupIndexByLeaf(groups: string[][]): Map<string, number> {
  const index = new Map<string, number>();
  groups.forEach((members, g) => {
    for (const label of members) index.set(label, g);
  });
  return index;
}

export function colorFor(groupIndex: number): string {
  return GROUP_COLORS[groupIndex % GROUP_COLORS.length];
}

const esc = (s: string) =>
  s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');

const f2 = (x: number) => x.toFixed(2);

/** SVG with leaves colored by their group at cut level k. */
export function renderDendrogram(artifact: DendrogramArtifact, k: number): string {
  const n = artifact.leaves.length;
  const groups = cutGroups(artifact, k);
  const groupOf = groupIndexByLeaf(groups);
  const rowH = 22;
  const labelW = 240;
  const plotW = 420;
  const width = labelW + plotW + 40;
  const height = rowH * n + 60;
  const maxH = Math.max(...artifact.merges.map((m) => m.height), 1e-12);

  const xOf = new Map<number, number>();
  const yOf = new Map<number, number>();
  artifact.leaf_order.forEach((leaf, rank) => {
    xOf.set(leaf, labelW);
    yOf.set(leaf, 40 + rowH * rank);
  });

  const out: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" data-k="${k}">`,
  ];
  artifact.leaves.forEach((label, leaf) => {
    const g = groupOf.get(label) ?? 0;
    out.push(
      `<text x="${labelW - 8}" y="${f2(yOf.get(leaf)! + 4)}" font-size="11" ` +
      `text-anchor="end" fill="${colorFor(g)}" data-group="${g}">${esc(label)}</text>`,
    );
  });
  artifact.merges.forEach((m, t) => {
    const node = n + t;
    const x = labelW + (plotW * m.height) / maxH;
    const yl = yOf.get(m.left)!;
    const yr = yOf.get(m.right)!;
    out.push(
      `<path d="M ${f2(xOf.get(m.left)!)} ${f2(yl)} H ${f2(x)} V ${f2(yr)} ` +
      `H ${f2(xOf.get(m.right)!)}" fill="none" stroke="#444" stroke-width="1.2" ` +
      `data-height="${m.height}"/>`,
    );
    xOf.set(node, x);
    yOf.set(node, (yl + yr) / 2);
  });
  out.push('</svg>');
  return out.join('\n');
}
