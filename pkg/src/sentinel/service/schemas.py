"""Pydantic request/response models for the triage API."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SessionSummaryItem(BaseModel):
    session_id: str
    country: str
    city: str
    date: str
    length: int
    rule_ids: list[str]
    score: float


class SessionPage(BaseModel):
    items: list[SessionSummaryItem]
    total: int
    offset: int
    limit: int


class RecordView(BaseModel):
    record_id: str
    date: str
    time: str
    url: str
    url_tokens: list[str]
    keywords: list[str]
    duration_seconds: int | None = None


class EvidenceView(BaseModel):
    rule_id: str
    record_id: str
    matched: str


class SessionDetail(BaseModel):
    session_id: str
    country: str
    city: str
    date: str
    records: list[RecordView]
    evidence: list[EvidenceView]
    label: str | None = None
    score: float


class LabelRequest(BaseModel):
    session_id: str
    label: str
    labeler: str = "analyst"


class LabelResponse(BaseModel):
    session_id: str
    label: str
    labeler: str
    labeled_at: str


class SampleBenignRequest(BaseModel):
    n: int = Field(gt=0)
    seed: int = 0


class SampleBenignResponse(BaseModel):
    labeled: int


class HyperSchema(BaseModel):
    learning_rate: float = 0.1
    l2: float = 1e-4
    epochs: int = 500
    seed: int = 0
    class_weight: float = 1.0
    threshold: float = 0.5


class RetrainRequest(BaseModel):
    kind: str = "logistic"
    hyper: HyperSchema | None = None


class MetricsSchema(BaseModel):
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: list[int]


class CVReportSchema(BaseModel):
    k: int
    fold_metrics: list[MetricsSchema]
    mean_accuracy: float


class DetectionSummary(BaseModel):
    total_sessions: int
    flagged_sessions: int
    fraction: float


class MetricsResponse(BaseModel):
    cv_report: CVReportSchema | None = None
    detection: DetectionSummary
    labeled_benign: int
    labeled_suspicious: int


class ErrorBody(BaseModel):
    error: str
    detail: str
