// Wire-format shapes of the evaluation service (HTTP+JSON).

export interface ClassificationDoc {
  precision: number | null;
  sensitivity: number | null;
  specificity: number | null;
  f1: number | null;
  accuracy: number | null;
  auc_roc: number | null;
}

export interface ConfusionDoc {
  tp: number;
  fp: number;
  tn: number;
  fn: number;
}

export interface SetEvaluationDoc {
  n: number;
  degenerate: string | null;
  classification: ClassificationDoc;
  calibration: { ece: number; brier: number } | null;
  confusion: ConfusionDoc | null;
}

export interface MetricsDoc {
  threshold: number;
  policy: { threshold: number; max_reject_fraction: number; grid_step: number };
  counts: { n: number; accepted: number; rejected: number };
  coverage: number | null;
  before: SetEvaluationDoc;
  after: SetEvaluationDoc;
  reduction: {
    fp_before: number;
    fn_before: number;
    fp_after: number;
    fn_after: number;
    prevented: number;
  };
}

export interface SweepPointDoc {
  threshold: number;
  reject_fraction: number;
  accuracy: number | null;
  ece: number | null;
  brier: number | null;
  objective: number | null;
  feasible: boolean;
}

export interface SweepDoc {
  selected_threshold: number;
  points: SweepPointDoc[];
}

export interface ReliabilityBinDoc {
  lower: number;
  upper: number;
  count: number;
  mean_confidence: number | null;
  accuracy: number | null;
}

export interface ReliabilityDoc {
  threshold: number;
  before: ReliabilityBinDoc[];
  after: ReliabilityBinDoc[] | null;
}

export interface ReviewDoc {
  run_id: string;
  sample_id: string;
  human_label: string;
  reviewer: string;
  timestamp: string;
}

export interface UncertainItemDoc {
  sample_id: string;
  entropy: number;
  probs: number[];
  predicted_label: string;
  true_label: string | null;
  review: ReviewDoc | null;
}

export interface UncertainPageDoc {
  threshold: number;
  total: number;
  page: number;
  page_size: number;
  items: UncertainItemDoc[];
}

export interface RunDoc {
  run_id: string;
  name: string;
  created: string;
  status: string;
  selected_threshold: number;
  policy: { threshold: number; max_reject_fraction: number; grid_step: number };
  bins: number;
  counts: { validation_n: number; test_n: number };
  class_names: string[];
  positive_class: number;
}

export interface FinalDoc {
  run_id: string;
  threshold: number;
  counts: { n: number; accepted: number; rejected: number; reviewed: number };
  coverage: number | null;
  metrics: SetEvaluationDoc;
}

export interface ErrorDoc {
  code: string;
  message: string;
  detail?: string;
}
