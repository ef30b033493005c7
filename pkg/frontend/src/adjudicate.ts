/** Adjudication loop state machine: next pair, keyboard verdict, undo, replay.
 *
 * Every number shown comes from a server payload; the session only tracks
 * which pair is on screen and a local history for undo. Network failures flip
 * the session offline and park verdicts in the queue; reconnect() replays
 * them and resumes.
 */

import { ApiError, ReviewApi } from './api';
import { OfflineQueue } from './queue';
import type {
  AgreementRow, Decision, PairView, Progress, QueueDone,
} from './types';
import { isDone } from './types';

export interface SessionState {
  annotator: string;
  current: PairView | null;
  done: QueueDone | null;
  offline: boolean;
  pendingCount: number;
  judged: number;
  total: number;
  agreement: AgreementRow[] | null;
  error: string | null;
}

type Listener = (state: SessionState) => void;

const isNetworkFailure = (err: unknown) => !(err instanceof ApiError);

export class AdjudicationSession {
  private state: SessionState;
  private history: PairView[] = [];
  private revisiting: PairView | null = null;
  private listeners: Listener[] = [];

  constructor(
    private readonly api: ReviewApi,
    private readonly queue: OfflineQueue,
    annotator: string,
  ) {
    this.state = {
      annotator,
      current: null,
      done: null,
      offline: false,
      pendingCount: queue.size,
      judged: 0,
      total: 0,
      agreement: null,
      error: null,
    };
  }

  snapshot(): SessionState {
    return { ...this.state };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch, pendingCount: this.queue.size };
    for (const listener of this.listeners) listener(this.snapshot());
  }

  async start(): Promise<void> {
    await this.advance();
  }

  private async refreshProgress(): Promise<Progress | null> {
    try {
      return await this.api.progress(this.state.annotator);
    } catch (err) {
      if (isNetworkFailure(err)) return null;
      throw err;
    }
  }

  private async advance(): Promise<void> {
    try {
      const progress = await this.refreshProgress();
      const next = await this.api.nextPair(this.state.annotator);
      if (isDone(next)) {
        let agreement: AgreementRow[] = [];
        try {
          agreement = (await this.api.agreement()).pairs;
        } catch {
          agreement = [];
        }
        this.emit({
          current: null,
          done: next,
          offline: false,
          judged: next.judged,
          total: next.total,
          agreement,
          error: null,
        });
        return;
      }
      this.emit({
        current: next,
        done: null,
        offline: false,
        judged: progress?.annotator?.judged ?? this.state.judged,
        total: next.total,
        error: null,
      });
    } catch (err) {
      if (isNetworkFailure(err)) {
        this.emit({ offline: true });
      } else {
        this.emit({ error: (err as Error).message });
      }
    }
  }

  /** Submit a verdict for the pair on screen and move on. */
  async judge(decision: Decision): Promise<void> {
    const pair = this.state.current;
    if (!pair) return;
    const submission = {
      pair_key: pair.pair_key,
      decision,
      annotator_id: this.state.annotator,
    };
    try {
      await this.api.submitVerdict(submission);
      this.history.push({ ...pair, my_verdict: decision });
      this.revisiting = null;
      await this.advance();
    } catch (err) {
      if (isNetworkFailure(err)) {
        this.queue.enqueue(submission);
        this.history.push({ ...pair, my_verdict: decision });
        this.revisiting = null;
        this.emit({ offline: true, current: null });
      } else {
        this.emit({ error: (err as Error).message });
      }
    }
  }

  /** Step back to the last judged pair; the next judge() supersedes it. */
  undo(): void {
    const previous = this.history.pop();
    if (!previous) return;
    this.revisiting = previous;
    this.emit({ current: previous, done: null, agreement: null });
  }

  get isRevisiting(): boolean {
    return this.revisiting !== null;
  }

  /** Replay queued verdicts; returns how many were delivered. */
  async reconnect(): Promise<number> {
    const delivered = await this.queue.replay((v) => this.api.submitVerdict(v));
    if (this.queue.size === 0) {
      await this.advance();
    } else {
      this.emit({ offline: true });
    }
    return delivered;
  }
}
