"""HTTP API powering the analyst triage loop.

All mutations (labels, retrain, rule reload) are serialized through one
lock and persisted to the state directory before the response returns;
reads see the stored state directly.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..errors import ConfigError, InsufficientLabels, UnknownSessionId
from ..models import Hyper, cv_report_to_obj
from ..rules import load_rule_config
from ..sessionize import UserSession
from ..store import (
    AppState,
    LabelRecord,
    apply_label,
    load_state,
    sample_benign,
    save_state,
    trigger_retrain,
)
from .schemas import (
    LabelRequest,
    LabelResponse,
    MetricsResponse,
    RetrainRequest,
    SampleBenignRequest,
    SampleBenignResponse,
    SessionDetail,
    SessionPage,
)

SESSION_STATUSES = ("flagged", "unlabeled", "labeled", "all")


def _error(status_code: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"error": error, "detail": detail})


def _session_summary(state: AppState, session: UserSession) -> dict:
    return {
        "session_id": session.session_id,
        "country": session.key.country,
        "city": session.key.city,
        "date": session.key.date.isoformat(),
        "length": len(session.records),
        "rule_ids": sorted({m.rule_id for m in state.matches_for(session.session_id)}),
        "score": state.score_session(session),
    }


def create_app(state_dir: str, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="sentinel triage service")
    state = load_state(state_dir)
    lock = threading.Lock()

    def persist() -> None:
        save_state(state, state_dir)

    @app.get("/api/sessions", response_model=SessionPage)
    def list_sessions(
        status: str = "flagged",
        sort: str = "score",
        offset: int = 0,
        limit: int = 50,
    ):
        if status not in SESSION_STATUSES:
            return _error(400, "bad_request", f"status must be one of {SESSION_STATUSES}")
        if sort != "score":
            return _error(400, "bad_request", "only sort=score is supported")
        if offset < 0 or limit < 1:
            return _error(400, "bad_request", "offset must be >= 0 and limit >= 1")

        flagged = state.detection.flagged_ids()
        labeled = set(state.effective_labels())
        if status == "flagged":
            pool = [s for s in state.sessions if s.session_id in flagged]
        elif status == "unlabeled":
            pool = [s for s in state.sessions if s.session_id not in labeled]
        elif status == "labeled":
            pool = [s for s in state.sessions if s.session_id in labeled]
        else:
            pool = list(state.sessions)

        summaries = [_session_summary(state, s) for s in pool]
        summaries.sort(key=lambda item: (-item["score"], item["session_id"]))
        return {
            "items": summaries[offset : offset + limit],
            "total": len(summaries),
            "offset": offset,
            "limit": limit,
        }

    @app.get("/api/sessions/{session_id}", response_model=SessionDetail)
    def get_session(session_id: str):
        session = state.sessions_by_id.get(session_id)
        if session is None:
            return _error(404, "not_found", f"unknown session id: {session_id}")
        effective = state.effective_labels().get(session_id)
        evidence = [
            {"rule_id": m.rule_id, "record_id": rid, "matched": matched}
            for m in state.matches_for(session_id)
            for rid, matched in m.evidence
        ]
        records = [
            {
                "record_id": r.record_id,
                "date": r.timestamp.date().isoformat(),
                "time": f"{r.timestamp.hour:02d}:{r.timestamp.minute:02d}",
                "url": r.raw_url,
                "url_tokens": list(r.url_tokens),
                "keywords": list(r.keywords),
                "duration_seconds": r.duration_seconds,
            }
            for r in session.records
        ]
        return {
            "session_id": session_id,
            "country": session.key.country,
            "city": session.key.city,
            "date": session.key.date.isoformat(),
            "records": records,
            "evidence": evidence,
            "label": effective.label if effective else None,
            "score": state.score_session(session),
        }

    @app.post("/api/labels", response_model=LabelResponse)
    def post_label(body: LabelRequest):
        if body.label not in ("benign", "suspicious"):
            return _error(400, "bad_request", "label must be 'benign' or 'suspicious'")
        record = LabelRecord(
            session_id=body.session_id,
            label=body.label,
            labeler=body.labeler,
            labeled_at=datetime.now(timezone.utc).replace(tzinfo=None),
        )
        with lock:
            try:
                apply_label(state, record)
            except UnknownSessionId as exc:
                return _error(404, "not_found", str(exc))
            persist()
            effective = state.effective_labels()[body.session_id]
        return {
            "session_id": effective.session_id,
            "label": effective.label,
            "labeler": effective.labeler,
            "labeled_at": effective.labeled_at.isoformat(),
        }

    @app.post("/api/labels/sample_benign", response_model=SampleBenignResponse)
    def post_sample_benign(body: SampleBenignRequest):
        with lock:
            labeled = sample_benign(state, body.n, body.seed)
            persist()
        return {"labeled": labeled}

    @app.post("/api/retrain")
    def post_retrain(body: RetrainRequest):
        if body.kind not in ("logistic", "svm"):
            return _error(400, "bad_request", "kind must be 'logistic' or 'svm'")
        hyper = Hyper(**body.hyper.model_dump()) if body.hyper else Hyper()
        with lock:
            try:
                _, report = trigger_retrain(state, body.kind, hyper)
            except InsufficientLabels as exc:
                return _error(409, "insufficient_labels", str(exc))
            persist()
        return cv_report_to_obj(report)

    @app.get("/api/metrics", response_model=MetricsResponse)
    def get_metrics():
        effective = state.effective_labels()
        n_suspicious = sum(1 for r in effective.values() if r.label == "suspicious")
        return {
            "cv_report": cv_report_to_obj(state.cv_report) if state.cv_report else None,
            "detection": {
                "total_sessions": state.detection.total_sessions,
                "flagged_sessions": state.detection.flagged_sessions,
                "fraction": state.detection.fraction,
            },
            "labeled_benign": len(effective) - n_suspicious,
            "labeled_suspicious": n_suspicious,
        }

    @app.post("/api/rules/reload")
    def post_rules_reload():
        from ..store import reload_rules

        rules_path = os.path.join(state_dir, "rules.json")
        with lock:
            try:
                config = load_rule_config(rules_path)
                detection = reload_rules(state, config)
            except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
                return _error(400, "bad_config", str(exc))
            persist()
        return {
            "total_sessions": detection.total_sessions,
            "flagged_sessions": detection.flagged_sessions,
            "fraction": detection.fraction,
        }

    @app.exception_handler(Exception)
    async def unhandled(request, exc):
        return _error(500, "internal_error", str(exc))

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
