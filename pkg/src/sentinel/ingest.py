"""Parsing of raw traffic exports into validated traffic records.

Two line-oriented encodings are supported:

* CSV with a mandatory header row ``date,time,country,city,url,keywords,duration_seconds``
* NDJSON with one object per line using the same field names (``keywords``
  may be a string or absent; ``record_id`` is honored when present)

Malformed lines are counted per reject reason, never fatal.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable

from .errors import (
    InvalidTimestamp,
    IoFailure,
    MissingField,
    NegativeDuration,
    ParseError,
)

CSV_COLUMNS = ("date", "time", "country", "city", "url", "keywords", "duration_seconds")

_PUNCT_ONLY = frozenset(".,;:!?'\"()[]{}<>-_/\\|&@#$%^*+=~`")


@dataclass(slots=True)
class TrafficRecord:
    """One visit to one webpage."""

    record_id: str
    timestamp: datetime
    country: str
    city: str
    raw_url: str
    url_tokens: tuple[str, ...]
    keywords: tuple[str, ...]
    duration_seconds: int | None = None


@dataclass(slots=True)
class IngestReport:
    total_lines: int = 0
    parsed: int = 0
    rejected: int = 0
    reject_reasons: dict[str, int] = field(default_factory=dict)


def normalize_url(raw_url: str) -> list[str]:
    """Reduce a URL to its lowercase path-segment tokens.

    Scheme, host (including any ``www.`` prefix and port), query string and
    fragment are dropped; the remaining path is split on ``/`` and empty
    segments are discarded. Degenerate input yields an empty list.
    """
    url = raw_url.split("#", 1)[0]
    url = url.split("?", 1)[0]
    url = url.strip()
    if "://" in url:
        url = url.split("://", 1)[1]
        url = url.split("/", 1)[1] if "/" in url else ""
    elif url.startswith("//"):
        url = url[2:]
        url = url.split("/", 1)[1] if "/" in url else ""
    return [seg.lower() for seg in url.split("/") if seg]


def parse_keywords(raw: str) -> list[str]:
    """Lowercase and whitespace-split a keyword string, dropping punctuation-only tokens."""
    tokens = []
    for tok in raw.lower().split():
        if all(ch in _PUNCT_ONLY for ch in tok):
            continue
        tokens.append(tok)
    return tokens


def _build_record(
    record_id: str,
    date_s: str,
    time_s: str,
    country: str,
    city: str,
    url: str,
    keywords_raw: str,
    duration_raw: str | int | None,
) -> TrafficRecord:
    for name, value in (
        ("date", date_s),
        ("time", time_s),
        ("country", country),
        ("city", city),
        ("url", url),
    ):
        if not value or not str(value).strip():
            raise MissingField(f"missing required field: {name}", field=name)

    try:
        timestamp = datetime.fromisoformat(f"{date_s.strip()} {time_s.strip()}")
    except ValueError:
        raise InvalidTimestamp(
            f"invalid timestamp: {date_s!r} {time_s!r}", field="date"
        ) from None

    duration: int | None = None
    if duration_raw is not None and str(duration_raw).strip() != "":
        try:
            duration = int(duration_raw)
        except (TypeError, ValueError):
            raise ParseError(
                f"non-integer duration: {duration_raw!r}", field="duration_seconds"
            ) from None
        if duration < 0:
            raise NegativeDuration(
                f"negative duration: {duration}", field="duration_seconds"
            )

    return TrafficRecord(
        record_id=record_id,
        timestamp=timestamp,
        country=sys.intern(country.strip()),
        city=sys.intern(city.strip()),
        raw_url=url.strip(),
        url_tokens=tuple(sys.intern(t) for t in normalize_url(url)),
        keywords=tuple(sys.intern(t) for t in parse_keywords(keywords_raw or "")),
        duration_seconds=duration,
    )


def _record_from_csv_row(row: list[str], record_id: str) -> TrafficRecord:
    if len(row) < 6:
        raise MissingField(f"expected {len(CSV_COLUMNS)} columns, got {len(row)}", field="row")
    duration = row[6] if len(row) > 6 else None
    return _build_record(record_id, row[0], row[1], row[2], row[3], row[4], row[5], duration)


def _record_from_obj(obj: dict, default_record_id: str) -> TrafficRecord:
    if not isinstance(obj, dict):
        raise ParseError("NDJSON line is not an object", field="line")
    keywords = obj.get("keywords") or ""
    if isinstance(keywords, list):
        keywords = " ".join(str(k) for k in keywords)
    record_id = str(obj.get("record_id") or default_record_id)
    return _build_record(
        record_id,
        str(obj.get("date") or ""),
        str(obj.get("time") or ""),
        str(obj.get("country") or ""),
        str(obj.get("city") or ""),
        str(obj.get("url") or ""),
        str(keywords),
        obj.get("duration_seconds"),
    )


def parse_record(line: str, format: str, record_id: str = "line:0") -> TrafficRecord:
    """Parse a single data line (no CSV header handling here)."""
    if format == "csv":
        rows = list(csv.reader([line]))
        if not rows:
            raise MissingField("empty line", field="row")
        return _record_from_csv_row(rows[0], record_id)
    if format == "ndjson":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            raise ParseError("invalid JSON", field="line") from None
        return _record_from_obj(obj, record_id)
    raise ValueError(f"unsupported format: {format}")


def load_corpus(
    source: Iterable[str] | io.TextIOBase,
    format: str,
    source_name: str = "stream",
) -> tuple[list[TrafficRecord], IngestReport]:
    """Parse a whole export, skipping and counting malformed lines.

    Line numbers are 1-based over the physical file (the CSV header is
    line 1 but excluded from ``total_lines``).
    """
    records: list[TrafficRecord] = []
    report = IngestReport()
    reasons = report.reject_reasons

    try:
        if format == "csv":
            reader = csv.reader(source)
            try:
                header = next(reader)
            except StopIteration:
                return records, report
            if [h.strip() for h in header] != list(CSV_COLUMNS):
                raise IoFailure(
                    f"bad CSV header: expected {','.join(CSV_COLUMNS)}"
                )
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                report.total_lines += 1
                try:
                    records.append(_record_from_csv_row(row, f"{source_name}:{lineno}"))
                    report.parsed += 1
                except ParseError as exc:
                    report.rejected += 1
                    reasons[exc.code] = reasons.get(exc.code, 0) + 1
        elif format == "ndjson":
            loads = json.loads
            for lineno, line in enumerate(source, start=1):
                if not line.strip():
                    continue
                report.total_lines += 1
                try:
                    obj = loads(line)
                except json.JSONDecodeError:
                    report.rejected += 1
                    reasons["parse_error"] = reasons.get("parse_error", 0) + 1
                    continue
                try:
                    records.append(_record_from_obj(obj, f"{source_name}:{lineno}"))
                    report.parsed += 1
                except ParseError as exc:
                    report.rejected += 1
                    reasons[exc.code] = reasons.get(exc.code, 0) + 1
        else:
            raise ValueError(f"unsupported format: {format}")
    except OSError as exc:
        raise IoFailure(f"cannot read {source_name}: {exc}") from exc

    return records, report


def record_to_obj(record: TrafficRecord) -> dict:
    """NDJSON-serializable form; parses back to an identical record."""
    ts = record.timestamp
    obj = {
        "record_id": record.record_id,
        "date": ts.date().isoformat(),
        "time": f"{ts.hour:02d}:{ts.minute:02d}",
        "country": record.country,
        "city": record.city,
        "url": record.raw_url,
        "keywords": " ".join(record.keywords),
    }
    if record.duration_seconds is not None:
        obj["duration_seconds"] = record.duration_seconds
    return obj


def write_ndjson(records: Iterable[TrafficRecord], stream: io.TextIOBase) -> int:
    """Write records as NDJSON; returns the number of lines written."""
    n = 0
    for record in records:
        stream.write(json.dumps(record_to_obj(record), sort_keys=True))
        stream.write("\n")
        n += 1
    return n
