/** Mirrors of the triage service's JSON shapes. Field names match the API exactly. */

export interface QueueItem {
  session_id: string;
  country: string;
  city: string;
  date: string;
  length: number;
  rule_ids: string[];
  score: number;
}

export interface SessionPage {
  items: QueueItem[];
  total: number;
  offset: number;
  limit: number;
}

export interface RecordView {
  record_id: string;
  date: string;
  time: string;
  url: string;
  url_tokens: string[];
  keywords: string[];
  duration_seconds: number | null;
}

export interface EvidenceView {
  rule_id: string;
  record_id: string;
  matched: string;
}

export interface SessionDetail {
  session_id: string;
  country: string;
  city: string;
  date: string;
  records: RecordView[];
  evidence: EvidenceView[];
  label: string | null;
  score: number;
}

export interface LabelResponse {
  session_id: string;
  label: string;
  labeler: string;
  labeled_at: string;
}

export interface FoldMetrics {
  accuracy: number;
  precision: number;
  recall: number;
  f1: number;
  confusion: number[];
}

export interface CVReport {
  k: number;
  fold_metrics: FoldMetrics[];
  mean_accuracy: number;
}

export interface DetectionSummary {
  total_sessions: number;
  flagged_sessions: number;
  fraction: number;
}

export interface MetricsResponse {
  cv_report: CVReport | null;
  detection: DetectionSummary;
  labeled_benign: number;
  labeled_suspicious: number;
}

export type Verdict = "benign" | "suspicious";
export type QueueTab = "flagged" | "unlabeled" | "labeled";
export type ModelKind = "logistic" | "svm";
