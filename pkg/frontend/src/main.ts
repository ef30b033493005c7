/** Browser entry point: review tab (keyboard adjudication) and explore tab. */

import { AdjudicationSession, SessionState } from './adjudicate';
import { ReviewApi } from './api';
import { OfflineQueue, StorageLike } from './queue';
import type { DendrogramArtifact, GenealogyLayout, ProfileLayout } from './types';
import { cutGroups, maxCut, renderDendrogram } from './views/dendrogram';
import { maxRibbonWidth, renderGenealogy } from './views/genealogy';
import { renderProfile } from './views/profile';

const api = new ReviewApi('');
const storage: StorageLike = window.localStorage;
const queue = new OfflineQueue(storage);

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let session: AdjudicationSession | null = null;

const KEYMAP: Record<string, 'similar' | 'distinct' | 'unsure' | 'undo'> = {
  s: 'similar',
  d: 'distinct',
  u: 'unsure',
  z: 'undo',
};

function renderState(state: SessionState): void {
  $('offline-banner').style.display = state.offline ? 'block' : 'none';
  $('pending-count').textContent = String(state.pendingCount);
  $('error-line').textContent = state.error ?? '';
  const bar = $('progress-fill');
  const ratio = state.total > 0 ? state.judged / state.total : 0;
  bar.style.width = `${(ratio * 100).toFixed(1)}%`;
  $('progress-text').textContent = `${state.judged} / ${state.total} judged`;

  const pairBox = $('pair-box');
  const doneBox = $('done-box');
  if (state.done) {
    pairBox.style.display = 'none';
    doneBox.style.display = 'block';
    const rows = (state.agreement ?? [])
      .map((r) => `<tr><td>${r.a}</td><td>${r.b}</td><td>${(r.percent * 100).toFixed(0)}%</td>` +
        `<td data-kappa="${r.kappa}">${r.kappa.toFixed(2)}</td><td>${r.n}</td></tr>`)
      .join('');
    $('agreement-body').innerHTML = rows ||
      '<tr><td colspan="5">no overlapping annotators yet</td></tr>';
    return;
  }
  doneBox.style.display = 'none';
  if (!state.current) {
    pairBox.style.display = 'none';
    return;
  }
  pairBox.style.display = 'block';
  const pair = state.current;
  $('left-text').textContent = pair.left.text;
  $('right-text').textContent = pair.right.text;
  $('left-items').textContent = pair.left.items.join(', ');
  $('right-items').textContent = pair.right.items.join(', ');
  $('pair-score').textContent = pair.score.toFixed(3);
  $('pair-key').textContent = pair.pair_key;
  $('prior-verdict').textContent = pair.my_verdict ? `prior: ${pair.my_verdict}` : '';
}

async function startReview(): Promise<void> {
  const annotator = ($('annotator-input') as HTMLInputElement).value.trim();
  if (!annotator) return;
  storage.setItem('speclineage.annotator', annotator);
  session = new AdjudicationSession(api, queue, annotator);
  session.subscribe(renderState);
  $('login-box').style.display = 'none';
  $('review-box').style.display = 'block';
  await session.start();
}

function bindKeyboard(): void {
  document.addEventListener('keydown', (ev) => {
    if (!session) return;
    if ((ev.target as HTMLElement).tagName === 'INPUT') return;
    const action = KEYMAP[ev.key.toLowerCase()];
    if (!action) return;
    ev.preventDefault();
    if (action === 'undo') {
      session.undo();
    } else {
      void session.judge(action);
    }
  });
}

function disabledView(target: HTMLElement, artifact: string, stage: string): void {
  target.innerHTML =
    `<p class="disabled-view">artifact <code>${artifact}</code> is missing; ` +
    `run <code>speclineage ${stage}</code> first.</p>`;
}

async function setupDendrogram(): Promise<void> {
  const target = $('dendrogram-view');
  const select = $('dendrogram-file') as HTMLSelectElement;
  const slider = $('cut-slider') as HTMLInputElement;
  const label = $('cut-label');
  const load = async () => {
    let artifact: DendrogramArtifact;
    try {
      artifact = await api.artifact<DendrogramArtifact>(select.value);
    } catch {
      disabledView(target, select.value, 'cluster');
      return;
    }
    slider.max = String(maxCut(artifact));
    slider.min = '1';
    const redraw = () => {
      const k = Number(slider.value);
      label.textContent = `k = ${k} (${cutGroups(artifact, k).length} groups)`;
      target.innerHTML = renderDendrogram(artifact, k);
    };
    slider.oninput = redraw;
    redraw();
  };
  select.onchange = load;
  await load();
}

async function setupGenealogy(): Promise<void> {
  const target = $('genealogy-view');
  const slider = $('edge-slider') as HTMLInputElement;
  const label = $('edge-label');
  let layout: GenealogyLayout;
  try {
    layout = await api.artifact<GenealogyLayout>('genealogy.json');
  } catch {
    disabledView(target, 'genealogy.json', 'render');
    return;
  }
  slider.min = '1';
  slider.max = String(Math.max(maxRibbonWidth(layout), 1) + 1);
  const redraw = () => {
    const minEdge = Number(slider.value);
    label.textContent = `min edge = ${minEdge}`;
    target.innerHTML = renderGenealogy(layout, minEdge);
    for (const rect of target.querySelectorAll('rect[data-id]')) {
      rect.addEventListener('click', () => {
        void showProfile((rect as SVGRectElement).dataset.id!);
      });
    }
  };
  slider.oninput = redraw;
  redraw();
}

async function showProfile(itemId: string): Promise<void> {
  const target = $('profile-view');
  const safe = itemId.replace(/[^\w.-]+/g, '_');
  try {
    const layout = await api.artifact<ProfileLayout>(`profile_${safe}.json`);
    $('profile-title').textContent = `shared specs: ${layout.title}`;
    target.innerHTML = renderProfile(layout);
  } catch {
    disabledView(target, `profile_${safe}.json`, 'render');
  }
}

function bindTabs(): void {
  for (const button of document.querySelectorAll<HTMLButtonElement>('[data-tab]')) {
    button.addEventListener('click', () => {
      for (const panel of document.querySelectorAll<HTMLElement>('.tab-panel')) {
        panel.style.display = panel.id === button.dataset.tab ? 'block' : 'none';
      }
    });
  }
}

function init(): void {
  bindTabs();
  bindKeyboard();
  const saved = storage.getItem('speclineage.annotator');
  if (saved) ($('annotator-input') as HTMLInputElement).value = saved;
  $('start-button').addEventListener('click', () => void startReview());
  $('reconnect-button').addEventListener('click', () => void session?.reconnect());
  void setupDendrogram();
  void setupGenealogy();
}

document.addEventListener('DOMContentLoaded', init);
