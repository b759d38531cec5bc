"""Pipeline state persistence and the analyst labeling loop.

State is a directory of the pipeline's own JSON/NDJSON files, no
database: sessions.ndjson, rules.json, detection.ndjson, labels.ndjson,
vocabulary.json, model.json, cv_report.json. Labels are append-only
history; the latest labeled_at wins per session.
"""

from __future__ import annotations

import json
import math
import os
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping

from .errors import CorruptState, InsufficientLabels, UnknownSessionId
from .features import (
    LabeledDataset,
    Vocabulary,
    assemble_dataset,
    build_vocabulary,
    vectorize,
    vocabulary_from_obj,
    vocabulary_to_obj,
)
from .models import (
    CVReport,
    Hyper,
    LinearModel,
    cross_validate,
    cv_report_from_obj,
    cv_report_to_obj,
    model_from_obj,
    model_to_obj,
    predict_score,
    train,
)
from .rules import (
    DetectionReport,
    RuleConfig,
    RuleSet,
    compile_ruleset,
    read_detection_ndjson,
    rule_config_from_obj,
    rule_config_to_obj,
    run_detection,
    write_detection_ndjson,
)
from .sessionize import UserSession, read_sessions_ndjson, write_sessions_ndjson

LABELS = ("benign", "suspicious")


@dataclass(slots=True)
class LabelRecord:
    session_id: str
    label: str
    labeler: str
    labeled_at: datetime

    def to_obj(self) -> dict:
        return {
            "session_id": self.session_id,
            "label": self.label,
            "labeler": self.labeler,
            "labeled_at": self.labeled_at.isoformat(),
        }

    @staticmethod
    def from_obj(obj: Mapping) -> "LabelRecord":
        return LabelRecord(
            session_id=obj["session_id"],
            label=obj["label"],
            labeler=obj["labeler"],
            labeled_at=datetime.fromisoformat(obj["labeled_at"]),
        )


@dataclass(slots=True)
class AppState:
    sessions: list[UserSession]
    rule_config: RuleConfig
    rule_set: RuleSet
    detection: DetectionReport
    label_history: list[LabelRecord] = field(default_factory=list)
    vocabulary: Vocabulary | None = None
    model: LinearModel | None = None
    cv_report: CVReport | None = None
    sessions_by_id: dict[str, UserSession] = field(default_factory=dict)
    _matches_by_session: dict[str, list] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sessions_by_id:
            self.sessions_by_id = {s.session_id: s for s in self.sessions}
        self.reindex_matches()

    def reindex_matches(self) -> None:
        self._matches_by_session = {}
        for match in self.detection.matches:
            self._matches_by_session.setdefault(match.session_id, []).append(match)

    def matches_for(self, session_id: str) -> list:
        return self._matches_by_session.get(session_id, [])

    def effective_labels(self) -> dict[str, LabelRecord]:
        effective: dict[str, LabelRecord] = {}
        for record in self.label_history:  # history order breaks timestamp ties
            current = effective.get(record.session_id)
            if current is None or record.labeled_at >= current.labeled_at:
                effective[record.session_id] = record
        return effective

    def score_session(self, session: UserSession) -> float:
        """Triage rank: model probability when a model exists, else match count."""
        if self.model is not None and self.vocabulary is not None:
            score = predict_score(self.model, vectorize(session, self.vocabulary))
            return 1.0 / (1.0 + math.exp(-score)) if score > -500 else 0.0
        return float(len(self.matches_for(session.session_id)))


def new_state(
    sessions: list[UserSession], rule_config: RuleConfig
) -> AppState:
    rule_set = compile_ruleset(rule_config)
    detection = run_detection(rule_set, sessions)
    return AppState(
        sessions=sessions,
        rule_config=rule_config,
        rule_set=rule_set,
        detection=detection,
    )


def apply_label(state: AppState, label: LabelRecord) -> AppState:
    """Append to history; effective label follows latest labeled_at."""
    if label.session_id not in state.sessions_by_id:
        raise UnknownSessionId(label.session_id)
    if label.label not in LABELS:
        raise ValueError(f"label must be one of {LABELS}, got {label.label!r}")
    state.label_history.append(label)
    return state


def sample_benign(state: AppState, n: int, seed: int) -> int:
    """Auto-label a seeded random sample of unflagged, unlabeled sessions as benign."""
    flagged = state.detection.flagged_ids()
    labeled = set(state.effective_labels())
    candidates = sorted(
        sid for sid in state.sessions_by_id if sid not in flagged and sid not in labeled
    )
    random.Random(seed).shuffle(candidates)
    now = datetime.now(timezone.utc).replace(tzinfo=None)
    taken = candidates[:n]
    for sid in taken:
        state.label_history.append(
            LabelRecord(session_id=sid, label="benign", labeler="auto-sample", labeled_at=now)
        )
    return len(taken)


def trigger_retrain(
    state: AppState, kind: str, hyper: Hyper | None = None, folds: int = 5
) -> tuple[LinearModel, CVReport]:
    """Rebuild vocabulary and dataset from effective labels, train and cross-validate.

    The stored model/report are only replaced once everything succeeded.
    """
    hyper = hyper or Hyper()
    effective = state.effective_labels()
    labels = {sid: (1 if rec.label == "suspicious" else 0) for sid, rec in effective.items()}
    n_suspicious = sum(1 for v in labels.values() if v == 1)
    n_benign = len(labels) - n_suspicious
    if n_suspicious < folds:
        raise InsufficientLabels("suspicious", folds, n_suspicious)
    if n_benign < folds:
        raise InsufficientLabels("benign", folds, n_benign)

    labeled_sessions = [state.sessions_by_id[sid] for sid in sorted(labels)]
    vocabulary = build_vocabulary(labeled_sessions)
    dataset = assemble_dataset(labeled_sessions, labels, vocabulary)
    model = train(dataset, hyper, kind)
    report = cross_validate(dataset, k=folds, kind=kind, hyper=hyper)

    state.vocabulary = vocabulary
    state.model = model
    state.cv_report = report
    return model, report


def reload_rules(state: AppState, config: RuleConfig) -> DetectionReport:
    """Swap in a new rule config and rerun detection (hot reload)."""
    rule_set = compile_ruleset(config)
    detection = run_detection(rule_set, state.sessions)
    state.rule_config = config
    state.rule_set = rule_set
    state.detection = detection
    state.reindex_matches()
    return detection


def _write_atomic(path: str, writer) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        writer(f)
    os.replace(tmp, path)


def save_state(state: AppState, directory) -> None:
    directory = str(directory)
    os.makedirs(directory, exist_ok=True)

    _write_atomic(
        os.path.join(directory, "sessions.ndjson"),
        lambda f: write_sessions_ndjson(state.sessions, f),
    )
    _write_atomic(
        os.path.join(directory, "rules.json"),
        lambda f: json.dump(rule_config_to_obj(state.rule_config), f, sort_keys=True, indent=2),
    )
    _write_atomic(
        os.path.join(directory, "detection.ndjson"),
        lambda f: write_detection_ndjson(state.detection, f),
    )
    _write_atomic(
        os.path.join(directory, "labels.ndjson"),
        lambda f: f.writelines(
            json.dumps(rec.to_obj(), sort_keys=True) + "\n" for rec in state.label_history
        ),
    )
    if state.vocabulary is not None:
        _write_atomic(
            os.path.join(directory, "vocabulary.json"),
            lambda f: json.dump(vocabulary_to_obj(state.vocabulary), f, sort_keys=True),
        )
    if state.model is not None:
        digest = state.vocabulary.digest() if state.vocabulary else ""
        _write_atomic(
            os.path.join(directory, "model.json"),
            lambda f: json.dump(model_to_obj(state.model, digest), f, sort_keys=True),
        )
    if state.cv_report is not None:
        _write_atomic(
            os.path.join(directory, "cv_report.json"),
            lambda f: json.dump(cv_report_to_obj(state.cv_report), f, sort_keys=True),
        )


def load_state(directory) -> AppState:
    directory = str(directory)

    def path(name: str) -> str:
        return os.path.join(directory, name)

    for required in ("sessions.ndjson", "rules.json"):
        if not os.path.exists(path(required)):
            raise CorruptState(f"missing state component: {required}")

    try:
        with open(path("sessions.ndjson"), encoding="utf-8") as f:
            sessions = read_sessions_ndjson(f)
        with open(path("rules.json"), encoding="utf-8") as f:
            rule_config = rule_config_from_obj(json.load(f))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CorruptState(f"unreadable state component: {exc}") from exc

    rule_set = compile_ruleset(rule_config)
    if os.path.exists(path("detection.ndjson")):
        with open(path("detection.ndjson"), encoding="utf-8") as f:
            detection = read_detection_ndjson(f)
    else:
        detection = run_detection(rule_set, sessions)

    state = AppState(
        sessions=sessions,
        rule_config=rule_config,
        rule_set=rule_set,
        detection=detection,
    )

    if os.path.exists(path("labels.ndjson")):
        with open(path("labels.ndjson"), encoding="utf-8") as f:
            state.label_history = [
                LabelRecord.from_obj(json.loads(line)) for line in f if line.strip()
            ]
    for record in state.label_history:
        if record.session_id not in state.sessions_by_id:
            raise CorruptState(f"label for unknown session: {record.session_id}")

    if os.path.exists(path("vocabulary.json")):
        with open(path("vocabulary.json"), encoding="utf-8") as f:
            state.vocabulary = vocabulary_from_obj(json.load(f))
    if os.path.exists(path("model.json")):
        if state.vocabulary is None:
            raise CorruptState("model.json present without vocabulary.json")
        with open(path("model.json"), encoding="utf-8") as f:
            model, digest = model_from_obj(json.load(f))
        if digest != state.vocabulary.digest():
            raise CorruptState("model vocabulary_digest does not match stored vocabulary")
        state.model = model
    if os.path.exists(path("cv_report.json")):
        with open(path("cv_report.json"), encoding="utf-8") as f:
            state.cv_report = cv_report_from_obj(json.load(f))

    return state
