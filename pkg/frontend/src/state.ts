// View state and controller. Every number shown in a panel is copied from a
// service payload; this module never derives metrics from other numbers.

import { ApiClient, ApiError } from './api.js';
import type {
  FinalDoc,
  MetricsDoc,
  ReliabilityDoc,
  SweepDoc,
  UncertainItemDoc,
} from './types.js';

export interface OperatingPointView {
  runId: string | null;
  status: 'idle' | 'loading' | 'ready';
  errorBanner: string | null;
  whatIfNote: string | null;
  selectedThreshold: number | null; // the stored policy; the slider never mutates it
  sliderThreshold: number | null;
  metrics: MetricsDoc | null; // what-if document at the slider position
  sweep: SweepDoc | null;
  reliability: ReliabilityDoc | null;
}

export interface ReviewQueueView {
  pending: UncertainItemDoc[]; // entropy-descending, verdicts outstanding
  reviewedIds: string[];
  total: number;
  final: FinalDoc | null;
}

export interface ViewState {
  run: OperatingPointView;
  queue: ReviewQueueView;
}

export type Listener = (state: ViewState) => void;

function emptyState(): ViewState {
  return {
    run: {
      runId: null,
      status: 'idle',
      errorBanner: null,
      whatIfNote: null,
      selectedThreshold: null,
      sliderThreshold: null,
      metrics: null,
      sweep: null,
      reliability: null,
    },
    queue: { pending: [], reviewedIds: [], total: 0, final: null },
  };
}

export interface ControllerOptions {
  debounceMs?: number;
  reviewer?: string;
}

export class RunController {
  readonly state: ViewState = emptyState();
  private readonly listeners: Listener[] = [];
  private readonly debounceMs: number;
  private readonly reviewer: string;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;
  private whatIfSequence = 0;

  constructor(
    private readonly client: ApiClient,
    options: ControllerOptions = {},
  ) {
    this.debounceMs = options.debounceMs ?? 150;
    this.reviewer = options.reviewer ?? 'reviewer';
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      const index = this.listeners.indexOf(listener);
      if (index >= 0) this.listeners.splice(index, 1);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  async loadRun(runId: string): Promise<void> {
    const run = this.state.run;
    run.runId = runId;
    run.status = 'loading';
    run.errorBanner = null;
    run.whatIfNote = null;
    this.notify();
    try {
      const runDoc = await this.client.getRun(runId);
      const [sweep, metrics, reliability, uncertain, final] = await Promise.all([
        this.client.getSweep(runId),
        this.client.getMetrics(runId),
        this.client.getReliability(runId),
        this.client.getUncertain(runId),
        this.client.getFinal(runId),
      ]);
      run.selectedThreshold = runDoc.selected_threshold;
      run.sliderThreshold = runDoc.selected_threshold;
      run.sweep = sweep;
      run.metrics = metrics;
      run.reliability = reliability;
      run.status = 'ready';
      this.state.queue.total = uncertain.total;
      this.state.queue.pending = uncertain.items.filter((item) => item.review === null);
      this.state.queue.reviewedIds = uncertain.items
        .filter((item) => item.review !== null)
        .map((item) => item.sample_id);
      this.state.queue.final = final;
    } catch (err) {
      run.status = 'idle';
      run.errorBanner =
        err instanceof ApiError && err.status === 404 ? 'run not found' : String(err);
    }
    this.notify();
  }

  /** Slider moved: update immediately, refresh what-if panels after a debounce. */
  onThresholdChange(threshold: number): Promise<void> {
    const run = this.state.run;
    run.sliderThreshold = threshold;
    this.notify();
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    const sequence = ++this.whatIfSequence;
    return new Promise((resolve) => {
      this.debounceTimer = setTimeout(() => {
        void this.refreshWhatIf(threshold, sequence).then(resolve);
      }, this.debounceMs);
    });
  }

  private async refreshWhatIf(threshold: number, sequence: number): Promise<void> {
    const run = this.state.run;
    if (run.runId === null) return;
    try {
      const [metrics, uncertain] = await Promise.all([
        this.client.getMetrics(run.runId, threshold),
        this.client.getUncertain(run.runId, { threshold }),
      ]);
      if (sequence !== this.whatIfSequence) return; // a newer slide superseded us
      run.metrics = metrics;
      run.whatIfNote = null;
      this.state.queue.total = uncertain.total;
      this.state.queue.pending = uncertain.items.filter((item) => item.review === null);
    } catch (err) {
      if (sequence !== this.whatIfSequence) return;
      if (err instanceof ApiError && err.status === 422) {
        run.metrics = null;
        run.whatIfNote = err.message;
      } else {
        run.errorBanner = String(err);
      }
    }
    this.notify();
  }

  /** Verdict submitted: the case leaves the pending list exactly when the
   * service acknowledges it (200) or reports it already reviewed (409). */
  async submitVerdict(sampleId: string, label: string): Promise<void> {
    const run = this.state.run;
    if (run.runId === null) return;
    try {
      await this.client.submitReview(run.runId, sampleId, label, this.reviewer);
      this.removeFromPending(sampleId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.removeFromPending(sampleId); // reviewed elsewhere; treat as done
      } else if (err instanceof ApiError && err.status === 404) {
        run.whatIfNote = 'case is not in the stored-threshold queue';
        this.notify();
        return;
      } else {
        run.errorBanner = String(err);
        this.notify();
        return;
      }
    }
    this.state.queue.final = await this.client.getFinal(run.runId);
    this.notify();
  }

  private removeFromPending(sampleId: string): void {
    const queue = this.state.queue;
    queue.pending = queue.pending.filter((item) => item.sample_id !== sampleId);
    if (!queue.reviewedIds.includes(sampleId)) queue.reviewedIds.push(sampleId);
  }
}
