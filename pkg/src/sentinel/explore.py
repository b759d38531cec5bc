"""Descriptive aggregations over traffic records and volume-deviation flags."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import UnknownLevel, WindowTooSmall
from .ingest import TrafficRecord

TIME_LEVELS = ("daily", "weekly", "monthly", "yearly", "minute", "hourly")
LOCATION_LEVELS = ("city", "country", "region")
CONTENT_LEVELS = ("webpage", "directory", "keywords", "keyword_category")
ALL_LEVELS = TIME_LEVELS + LOCATION_LEVELS + CONTENT_LEVELS

# UN macro-region lookup for the default region aggregation; override via
# the region_map argument when the monitored org needs finer buckets.
DEFAULT_REGIONS: dict[str, str] = {
    "united states": "Americas",
    "canada": "Americas",
    "mexico": "Americas",
    "brazil": "Americas",
    "argentina": "Americas",
    "chile": "Americas",
    "colombia": "Americas",
    "united kingdom": "Europe",
    "ireland": "Europe",
    "france": "Europe",
    "germany": "Europe",
    "spain": "Europe",
    "portugal": "Europe",
    "italy": "Europe",
    "netherlands": "Europe",
    "belgium": "Europe",
    "switzerland": "Europe",
    "austria": "Europe",
    "poland": "Europe",
    "sweden": "Europe",
    "norway": "Europe",
    "denmark": "Europe",
    "finland": "Europe",
    "greece": "Europe",
    "ukraine": "Europe",
    "russia": "Europe",
    "turkey": "Asia",
    "china": "Asia",
    "japan": "Asia",
    "india": "Asia",
    "south korea": "Asia",
    "singapore": "Asia",
    "malaysia": "Asia",
    "indonesia": "Asia",
    "thailand": "Asia",
    "vietnam": "Asia",
    "philippines": "Asia",
    "pakistan": "Asia",
    "bangladesh": "Asia",
    "israel": "Asia",
    "saudi arabia": "Asia",
    "united arab emirates": "Asia",
    "iran": "Asia",
    "iraq": "Asia",
    "syria": "Asia",
    "egypt": "Africa",
    "libya": "Africa",
    "nigeria": "Africa",
    "kenya": "Africa",
    "south africa": "Africa",
    "morocco": "Africa",
    "algeria": "Africa",
    "ghana": "Africa",
    "australia": "Oceania",
    "new zealand": "Oceania",
}


@dataclass(slots=True)
class VolumeTable:
    level: str
    rows: list[tuple[str, int]]


@dataclass(slots=True)
class AnomalyFlag:
    bucket_label: str
    observed: int
    expected: float
    score: float


def _bucket(record: TrafficRecord, level: str, keyword_categories, region_map) -> str | None:
    ts = record.timestamp
    if level == "daily":
        return ts.date().isoformat()
    if level == "weekly":
        # label by the Monday starting the week
        monday = ts.date().fromordinal(ts.date().toordinal() - ts.weekday())
        return monday.isoformat()
    if level == "monthly":
        return f"{ts.year:04d}-{ts.month:02d}"
    if level == "yearly":
        return f"{ts.year:04d}"
    if level == "minute":
        return f"{ts.date().isoformat()} {ts.hour:02d}:{ts.minute:02d}"
    if level == "hourly":
        return f"{ts.date().isoformat()} {ts.hour:02d}"
    if level == "city":
        return record.city
    if level == "country":
        return record.country
    if level == "region":
        return region_map.get(record.country.lower(), "Other")
    if level == "webpage":
        return "/".join(record.url_tokens) if record.url_tokens else None
    if level == "directory":
        return record.url_tokens[0] if record.url_tokens else None
    if level == "keywords":
        return " ".join(record.keywords) if record.keywords else None
    if level == "keyword_category":
        if not record.keywords:
            return None
        tokens = set(record.keywords)
        # a record counts once, toward the alphabetically first matching category
        for name in sorted(keyword_categories):
            if tokens & keyword_categories[name]:
                return name
        return None
    raise UnknownLevel(level)


def aggregate_volume(
    records: Iterable[TrafficRecord],
    level: str,
    keyword_categories: Mapping[str, set[str]] | None = None,
    region_map: Mapping[str, str] | None = None,
) -> VolumeTable:
    """Count records per bucket at the requested aggregation level.

    Records without a value at the level (no keywords, empty URL path) do
    not contribute. Rows sort by bucket label, which is chronological for
    the time levels.
    """
    if level not in ALL_LEVELS:
        raise UnknownLevel(level)
    if level == "keyword_category" and keyword_categories is None:
        raise UnknownLevel("keyword_category requires a category dictionary")
    categories = (
        {k: set(v) for k, v in keyword_categories.items()} if keyword_categories else {}
    )
    regions = region_map if region_map is not None else DEFAULT_REGIONS

    counts: Counter = Counter()
    for record in records:
        bucket = _bucket(record, level, categories, regions)
        if bucket is not None:
            counts[bucket] += 1
    return VolumeTable(level=level, rows=sorted(counts.items()))


def foreign_share(records: Sequence[TrafficRecord], home_country: str) -> float:
    """Fraction of records originating outside the home country."""
    total = len(records)
    if total == 0:
        return 0.0
    foreign = sum(1 for r in records if r.country != home_country)
    return foreign / total


def top_locations(
    records: Iterable[TrafficRecord], k: int, exclude: str | None = None
) -> list[tuple[str, int]]:
    """Top-k countries by record count, descending, ties alphabetical."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts: Counter = Counter()
    for r in records:
        if exclude is not None and r.country == exclude:
            continue
        counts[r.country] += 1
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def detect_volume_anomalies(
    table: VolumeTable, window: int, z_threshold: float = 3.0
) -> list[AnomalyFlag]:
    """Flag buckets whose count exceeds the trailing-window mean by more
    than ``z_threshold`` trailing standard deviations.

    The first ``window`` buckets have insufficient history and are never
    flagged. A zero-variance window flags any strictly greater observation
    (score reported as +inf).
    """
    if window < 2:
        raise WindowTooSmall(f"window must be >= 2, got {window}")
    if table.level not in TIME_LEVELS:
        raise UnknownLevel(f"not a time level: {table.level}")

    flags: list[AnomalyFlag] = []
    counts = [count for _, count in table.rows]
    for i in range(window, len(counts)):
        trailing = counts[i - window : i]
        mean = sum(trailing) / window
        var = sum((c - mean) ** 2 for c in trailing) / window
        observed = counts[i]
        if var == 0.0:
            if observed > mean:
                flags.append(
                    AnomalyFlag(table.rows[i][0], observed, mean, math.inf)
                )
            continue
        score = (observed - mean) / math.sqrt(var)
        if score > z_threshold:
            flags.append(AnomalyFlag(table.rows[i][0], observed, mean, score))
    return flags


def write_volume_csv(table: VolumeTable, stream) -> None:
    stream.write("bucket,count\n")
    for bucket, count in table.rows:
        escaped = '"' + bucket.replace('"', '""') + '"' if "," in bucket else bucket
        stream.write(f"{escaped},{count}\n")
