import { describe, expect, it } from 'vitest';

import {
  cutGroups, groupIndexByLeaf, maxCut, renderDendrogram,
} from '../src/views/dendrogram';
import { filterRibbons, maxRibbonWidth, renderGenealogy } from '../src/views/genealogy';
import { profileValues, renderProfile } from '../src/views/profile';
import type { DendrogramArtifact, GenealogyLayout, ProfileLayout } from '../src/types';

const artifact: DendrogramArtifact = {
  leaves: ['A', 'B', 'C'],
  merges: [
    { left: 0, right: 1, height: 1.0, size: 2 },
    { left: 2, right: 3, height: 5.0, size: 3 },
  ],
  metric: 'jaccard',
  linkage: 'complete',
  leaf_order: [2, 0, 1],
  cuts: {
    '1': [['A', 'B', 'C']],
    '2': [['A', 'B'], ['C']],
    '3': [['A'], ['B'], ['C']],
  },
};

const genealogy: GenealogyLayout = {
  nodes: [
    { id: 'g1', title: 'Game 1', weight: 7, x: 0 },
    { id: 'g2', title: 'Game 2', weight: 8, x: 1 },
    { id: 'g3', title: 'Game 3', weight: 3, x: 2 },
  ],
  ribbons: [
    { from: 'g1', to: 'g2', width: 5 },
    { from: 'g1', to: 'g3', width: 2 },
    { from: 'g2', to: 'g3', width: 3 },
  ],
};

const profile: ProfileLayout = {
  item: 'g2',
  title: 'Game 2',
  bars: [
    { item_id: 'g1', title: 'Game 1', value: 5 },
    { item_id: 'g3', title: 'Game 3', value: 3 },
  ],
};

describe('dendrogram view', () => {
  it('reads groups straight from the exported cut table', () => {
    expect(cutGroups(artifact, 2)).toEqual([['A', 'B'], ['C']]);
    expect(maxCut(artifact)).toBe(3);
  });

  it('refuses to invent cuts when the artifact lacks them', () => {
    const bare = { ...artifact, cuts: undefined };
    expect(() => cutGroups(bare, 2)).toThrow(/re-run the cluster stage/);
  });

  it('colors leaves by group at the chosen k', () => {
    const svg = renderDendrogram(artifact, 2);
    const groups = [...svg.matchAll(/data-group="(\d+)"/g)].map((m) => m[1]);
    expect(new Set(groups).size).toBe(2);
    const k1 = renderDendrogram(artifact, 1);
    expect(new Set([...k1.matchAll(/data-group="(\d+)"/g)].map((m) => m[1])).size).toBe(1);
  });

  it('maps leaves to group indices', () => {
    const index = groupIndexByLeaf(cutGroups(artifact, 2));
    expect(index.get('A')).toBe(index.get('B'));
    expect(index.get('C')).not.toBe(index.get('A'));
  });

  it('draws one bracket per merge with its height attached', () => {
    const svg = renderDendrogram(artifact, 1);
    expect([...svg.matchAll(/data-height="([^"]+)"/g)].map((m) => m[1]))
      .toEqual(['1', '5']);
  });
});

describe('genealogy view', () => {
  it('filters ribbons under the min-edge slider', () => {
    expect(filterRibbons(genealogy, 1)).toHaveLength(3);
    expect(filterRibbons(genealogy, 3).map((r) => r.width)).toEqual([5, 3]);
    expect(filterRibbons(genealogy, maxRibbonWidth(genealogy) + 1)).toEqual([]);
  });

  it('renders every surviving ribbon and node with its data values', () => {
    const svg = renderGenealogy(genealogy, 3);
    expect([...svg.matchAll(/data-width="(\d+)"/g)].map((m) => Number(m[1])))
      .toEqual([5, 3]);
    expect([...svg.matchAll(/data-weight="(\d+)"/g)].map((m) => Number(m[1])))
      .toEqual([7, 8, 3]);
  });

  it('slider above the widest ribbon empties the view', () => {
    const svg = renderGenealogy(genealogy, 99);
    expect(svg).not.toContain('<path');
    expect(svg).toContain('data-id="g1"');
  });
});

describe('profile view', () => {
  it('exposes bar values as-is', () => {
    expect(profileValues(profile)).toEqual([5, 3]);
  });

  it('renders one bar per other item with printed values', () => {
    const svg = renderProfile(profile);
    expect([...svg.matchAll(/data-value="(\d+)"/g)].map((m) => Number(m[1])))
      .toEqual([5, 3]);
    expect(svg).toContain('>5</text>');
    expect(svg).toContain('>3</text>');
    expect(svg).toContain('Game 1');
  });
});
