/** Per-item shared-spec profile: one horizontal bar per other item. */

import type { ProfileLayout } from '../types';

export function profileValues(layout: ProfileLayout): number[] {
  return layout.bars.map((b) => b.value);
}

const esc = (s: string) =>
  s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');

const f2 = (x: number) => x.toFixed(2);

export function renderProfile(layout: ProfileLayout): string {
  const bars = layout.bars;
  const rowH = 20;
  const labelW = 240;
  const plotW = 360;
  const width = labelW + plotW + 60;
  const height = rowH * Math.max(bars.length, 1) + 60;
  const maxV = Math.max(...bars.map((b) => b.value), 1);
  const out: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">`,
    `<title>shared specs: ${esc(layout.title)}</title>`,
  ];
  bars.forEach((b, rank) => {
    const y = 30 + rowH * rank;
    const w = (plotW * b.value) / maxV;
    out.push(
      `<text x="${labelW - 8}" y="${f2(y + 11)}" font-size="11" ` +
      `text-anchor="end">${esc(b.title)}</text>`,
      `<rect x="${labelW}" y="${f2(y)}" width="${f2(w)}" height="14" ` +
      `fill="#2b5876" data-item="${esc(b.item_id)}" data-value="${b.value}"/>`,
      `<text x="${f2(labelW + w + 6)}" y="${f2(y + 11)}" font-size="10">${b.value}</text>`,
    );
  });
  out.push('</svg>');
  return out.join('\n');
}
