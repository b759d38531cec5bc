"""Grouping of traffic records into user sessions.

A session is the chronologically ordered set of records sharing
(country, city, calendar date). Groups smaller than the minimum size and
records with unidentified locations are dropped and counted.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime
from typing import Iterable, Sequence

from .ingest import TrafficRecord, record_to_obj

UNIDENTIFIED_LOCATIONS = frozenset({"", "unknown", "(not set)"})


@dataclass(frozen=True, slots=True)
class SessionKey:
    country: str
    city: str
    date: Date


@dataclass(slots=True)
class UserSession:
    session_id: str
    key: SessionKey
    records: tuple[TrafficRecord, ...]
    start_time: datetime
    end_time: datetime
    page_tokens: Counter
    keyword_tokens: Counter

    def __len__(self) -> int:
        return len(self.records)


@dataclass(slots=True)
class DropReport:
    unkeyed: int = 0
    undersized: int = 0
    undersized_groups: int = 0

    @property
    def dropped(self) -> int:
        return self.unkeyed + self.undersized


@dataclass(slots=True)
class SessionSummary:
    session_count: int
    min_length: int
    mean_length: float


def session_key(record: TrafficRecord) -> SessionKey | None:
    """Project a record onto its grouping key; None for unidentified locations."""
    if record.country.lower() in UNIDENTIFIED_LOCATIONS:
        return None
    if record.city.lower() in UNIDENTIFIED_LOCATIONS:
        return None
    return SessionKey(record.country, record.city, record.timestamp.date())


def _session_id(key: SessionKey, first_record_id: str) -> str:
    material = f"{key.country}|{key.city}|{key.date.isoformat()}|{first_record_id}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:16]


def build_session(key: SessionKey, records: Sequence[TrafficRecord]) -> UserSession:
    """Assemble one session from records already known to share ``key``."""
    ordered = sorted(records, key=lambda r: (r.timestamp, r.record_id))
    pages: Counter = Counter()
    kws: Counter = Counter()
    for r in ordered:
        pages.update(r.url_tokens)
        kws.update(r.keywords)
    return UserSession(
        session_id=_session_id(key, ordered[0].record_id),
        key=key,
        records=tuple(ordered),
        start_time=ordered[0].timestamp,
        end_time=ordered[-1].timestamp,
        page_tokens=pages,
        keyword_tokens=kws,
    )


def build_sessions(
    records: Iterable[TrafficRecord], min_length: int = 3
) -> tuple[list[UserSession], DropReport]:
    """Partition keyed records into sessions of at least ``min_length`` records.

    Output is sorted by (date, country, city); record order inside a session
    is (timestamp, record_id).
    """
    if min_length < 1:
        raise ValueError("min_length must be >= 1")

    groups: dict[SessionKey, list[TrafficRecord]] = {}
    report = DropReport()
    for record in records:
        key = session_key(record)
        if key is None:
            report.unkeyed += 1
            continue
        groups.setdefault(key, []).append(record)

    sessions: list[UserSession] = []
    for key, members in groups.items():
        if len(members) < min_length:
            report.undersized += len(members)
            report.undersized_groups += 1
            continue
        sessions.append(build_session(key, members))

    sessions.sort(key=lambda s: (s.key.date, s.key.country, s.key.city))
    return sessions, report


def summarize_sessions(sessions: Sequence[UserSession]) -> SessionSummary:
    """Count/min/mean of session lengths; mean rounded to one decimal."""
    if not sessions:
        return SessionSummary(session_count=0, min_length=0, mean_length=0.0)
    lengths = [len(s) for s in sessions]
    return SessionSummary(
        session_count=len(lengths),
        min_length=min(lengths),
        mean_length=round(sum(lengths) / len(lengths), 1),
    )


def session_to_obj(session: UserSession) -> dict:
    return {
        "session_id": session.session_id,
        "country": session.key.country,
        "city": session.key.city,
        "date": session.key.date.isoformat(),
        "records": [record_to_obj(r) for r in session.records],
    }


def session_from_obj(obj: dict) -> UserSession:
    from .ingest import _record_from_obj  # line-level parser doubles as reader

    key = SessionKey(obj["country"], obj["city"], Date.fromisoformat(obj["date"]))
    records = [
        _record_from_obj(r, f"{obj['session_id']}:{i}")
        for i, r in enumerate(obj["records"])
    ]
    return build_session(key, records)


def write_sessions_ndjson(sessions: Iterable[UserSession], stream) -> int:
    n = 0
    for session in sessions:
        stream.write(json.dumps(session_to_obj(session), sort_keys=True))
        stream.write("\n")
        n += 1
    return n


def read_sessions_ndjson(stream) -> list[UserSession]:
    sessions = []
    for line in stream:
        if line.strip():
            sessions.append(session_from_obj(json.loads(line)))
    return sessions
