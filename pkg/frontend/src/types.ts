/** Wire types mirroring the review API payloads and exported JSON artifacts. */

export type Decision = 'similar' | 'distinct' | 'unsure';

export interface PairSide {
  class: number;
  text: string;
  items: string[];
}

export interface PairView {
  pair_key: string;
  left: PairSide;
  right: PairSide;
  score: number;
  my_verdict: Decision | null;
  position: number;
  total: number;
}

export interface QueueDone {
  done: true;
  judged: number;
  total: number;
}

export type NextPairResponse = PairView | QueueDone;

export function isDone(r: NextPairResponse): r is QueueDone {
  return (r as QueueDone).done === true;
}

export interface Progress {
  total: number;
  annotators: Record<string, number>;
  annotator?: { id: string; judged: number; remaining: number };
}

export interface AgreementRow {
  a: string;
  b: string;
  percent: number;
  kappa: number;
  n: number;
}

export interface AgreementSummary {
  pairs: AgreementRow[];
}

export interface VerdictSubmission {
  pair_key: string;
  decision: Decision;
  annotator_id: string;
}

export interface DendrogramMerge {
  left: number;
  right: number;
  height: number;
  size: number;
}

export interface DendrogramArtifact {
  leaves: string[];
  merges: DendrogramMerge[];
  metric: string;
  linkage: string;
  leaf_order: number[];
  cuts?: Record<string, string[][]>;
}

export interface GenealogyNode {
  id: string;
  title: string;
  weight: number;
  x: number;
}

export interface GenealogyRibbon {
  from: string;
  to: string;
  width: number;
}

export interface GenealogyLayout {
  nodes: GenealogyNode[];
  ribbons: GenealogyRibbon[];
}

export interface ProfileBar {
  item_id: string;
  title: string;
  value: number;
}

export interface ProfileLayout {
  item: string;
  title: string;
  bars: ProfileBar[];
}
