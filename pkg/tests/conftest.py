from datetime import datetime

import pytest

from sentinel.ingest import TrafficRecord, normalize_url, parse_keywords
from sentinel.rules import rule_config_from_obj
from sentinel.sessionize import build_sessions
from sentinel.synth import DEFAULT_RULE_CONFIG_OBJ


def make_record(
    record_id="r1",
    date="2015-01-01",
    time="09:00",
    country="United States",
    city="New York",
    url="http://www.example.com/insights/reports",
    keywords="",
    duration=10,
):
    return TrafficRecord(
        record_id=record_id,
        timestamp=datetime.fromisoformat(f"{date} {time}"),
        country=country,
        city=city,
        raw_url=url,
        url_tokens=tuple(normalize_url(url)),
        keywords=tuple(parse_keywords(keywords)),
        duration_seconds=duration,
    )


def make_session(records=None, **kwargs):
    """Build one session from records sharing a location/date."""
    if records is None:
        records = [
            make_record(record_id=f"r{i}", time=f"09:{i:02d}", **kwargs) for i in range(3)
        ]
    sessions, _ = build_sessions(records, min_length=1)
    assert len(sessions) == 1
    return sessions[0]


@pytest.fixture
def rule_config():
    return rule_config_from_obj(DEFAULT_RULE_CONFIG_OBJ)
