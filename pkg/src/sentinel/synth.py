"""Seeded synthetic traffic generator with full ground truth.

Every planned session occupies a unique (country, city, date) slot so
sessionization reconstructs the plan exactly. Suspicious plans cycle
through one archetype per rule kind, each guaranteed to trigger its rule
against the companion rule config; benign plans never trigger any rule.

Randomness comes from a splitmix64 stream so corpora are reproducible
bit-for-bit for a given seed, independent of platform.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import datetime, timedelta
from typing import Sequence

from .errors import InfeasibleProfile
from .ingest import TrafficRecord, record_to_obj
from .rules import RuleConfig, rule_config_from_obj
from .sessionize import SessionKey, _session_id

_MASK = (1 << 64) - 1


class SplitMix64:
    """Deterministic 64-bit mix-function generator."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return (self.next_u64() * n) >> 64

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def choice(self, seq: Sequence):
        return seq[self.below(len(seq))]

    def random(self) -> float:
        return self.next_u64() / float(1 << 64)

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True, slots=True)
class Archetype:
    name: str
    pages: tuple[tuple[str, ...], ...]
    keywords: tuple[str, ...]
    rule_kind: str | None
    location_pool: str  # "business" | "foreign_benign" | "foreign_suspicious"
    trigger_pages: tuple[tuple[str, ...], ...] = ()
    trigger_keywords: tuple[str, ...] = ()


BUSINESS_LOCATIONS: tuple[tuple[str, str], ...] = (
    ("United States", "New York"),
    ("United States", "Chicago"),
    ("United States", "Washington"),
    ("United States", "Houston"),
    ("United Kingdom", "London"),
    ("United Kingdom", "Manchester"),
    ("Canada", "Toronto"),
    ("Canada", "Vancouver"),
)

FOREIGN_BENIGN_LOCATIONS: tuple[tuple[str, str], ...] = (
    ("Germany", "Berlin"),
    ("Germany", "Munich"),
    ("France", "Paris"),
    ("India", "Mumbai"),
    ("India", "Delhi"),
    ("Japan", "Tokyo"),
    ("Australia", "Sydney"),
)

SUSPICIOUS_LOCATIONS: tuple[tuple[str, str], ...] = (
    ("Syria", "Damascus"),
    ("Syria", "Aleppo"),
    ("Libya", "Tripoli"),
    ("Libya", "Benghazi"),
    ("Ukraine", "Kiev"),
    ("Ukraine", "Odessa"),
    ("Iran", "Tehran"),
)

BENIGN_ARCHETYPES: tuple[Archetype, ...] = (
    Archetype(
        name="job-seeker",
        pages=(("careers", "search-jobs"), ("careers", "openings"),
               ("careers", "benefits"), ("careers", "internships")),
        keywords=("jobs", "hiring", "internship", "salary", "openings"),
        rule_kind=None,
        location_pool="benign_any",
    ),
    Archetype(
        name="client-researcher",
        pages=(("services", "consulting"), ("services", "advisory"),
               ("industries", "energy"), ("industries", "healthcare")),
        keywords=("consulting", "advisory", "energy", "healthcare"),
        rule_kind=None,
        location_pool="benign_any",
    ),
    Archetype(
        name="report-reader",
        pages=(("insights", "reports"), ("insights", "articles"),
               ("news", "press-releases"), ("about", "history")),
        keywords=("quarterly", "annual", "outlook", "trends"),
        rule_kind=None,
        location_pool="benign_any",
    ),
)

SUSPICIOUS_ARCHETYPES: tuple[Archetype, ...] = (
    Archetype(
        name="sensitive-searcher",
        pages=(("search", "results"), ("sitemap", "index")),
        keywords=("directory", "listing"),
        rule_kind="sensitive_search_foreign",
        location_pool="foreign_suspicious",
        trigger_keywords=("biography", "contact", "litigation", "investigations"),
    ),
    Archetype(
        name="portal-prober",
        pages=(("login", "help"), ("sitemap", "index")),
        keywords=("login", "portal"),
        rule_kind="employee_only_access",
        location_pool="foreign_suspicious",
        trigger_pages=(("employee", "resources"), ("intranet", "tools")),
    ),
    Archetype(
        name="persistent-insider",
        pages=(("employee", "resources"), ("intranet", "tools")),
        keywords=("portal", "vpn"),
        rule_kind="repeat_employee_only_access",
        location_pool="business",
        trigger_pages=(("employee", "resources"), ("intranet", "tools")),
    ),
    Archetype(
        name="bulk-scraper",
        pages=(("downloads", "archive"), ("sitemap", "full")),
        keywords=("archive", "export"),
        rule_kind="volume_threshold",
        location_pool="business",
    ),
    Archetype(
        name="engagement-prober",
        pages=(("press", "media-kit"),),
        keywords=("newsletter", "subscribe"),
        rule_kind="engagement_page_foreign",
        location_pool="foreign_suspicious",
        trigger_pages=(("newsletter", "register"), ("contact", "enquiry")),
    ),
)

DEFAULT_RULE_CONFIG_OBJ = {
    "business_countries": ["United States", "United Kingdom", "Canada"],
    "keyword_categories": {
        "employee_bio": ["biography", "bio", "resume"],
        "employee_contact": ["contact", "email", "phone"],
        "sensitive_product": ["litigation", "forensics", "discovery"],
        "sensitive_service": ["investigations", "diligence", "compliance"],
        "benign_interest": ["consulting", "advisory", "quarterly"],
    },
    "page_categories": {
        "employee_only": ["employee/resources", "intranet"],
        "newsletter_registration": ["newsletter/register"],
        "enquiry_form": ["contact/enquiry"],
    },
    "repeat_access": {"min_occurrences": 3, "window_days": 7},
    "volume_threshold": {"max_records": 30, "window": "daily"},
}


@dataclass(slots=True)
class GeneratorProfile:
    n_sessions: int = 1000
    suspicious_fraction: float = 0.06
    seed: int = 0
    overlap: float = 0.0
    session_length_range: tuple[int, int] = (3, 12)
    date_start: Date = Date(2015, 1, 1)
    date_days: int = 365
    benign_archetypes: tuple[Archetype, ...] = BENIGN_ARCHETYPES
    suspicious_archetypes: tuple[Archetype, ...] = SUSPICIOUS_ARCHETYPES
    business_locations: tuple[tuple[str, str], ...] = BUSINESS_LOCATIONS
    foreign_benign_locations: tuple[tuple[str, str], ...] = FOREIGN_BENIGN_LOCATIONS
    suspicious_locations: tuple[tuple[str, str], ...] = SUSPICIOUS_LOCATIONS


def _scale_pool(
    pool: tuple[tuple[str, str], ...], needed_slots: int, days: int
) -> tuple[tuple[str, str], ...]:
    capacity = len(pool) * days
    if capacity >= needed_slots:
        return pool
    factor = -(-needed_slots // capacity)  # ceil
    return tuple(
        (country, f"{city} {k}" if k else city)
        for country, city in pool
        for k in range(factor)
    )


def profile_for(
    n_sessions: int,
    suspicious_fraction: float = 0.06,
    seed: int = 0,
    overlap: float = 0.0,
    date_days: int = 365,
    session_length_range: tuple[int, int] = (3, 12),
) -> GeneratorProfile:
    """Build a profile whose location pools are scaled to fit ``n_sessions``.

    City pools grow by numbered suffixes ("London 1", "London 2", ...) so
    every planned session finds a free (location, date) slot with headroom.
    """
    n_suspicious = int(n_sessions * suspicious_fraction + 0.5)
    n_benign = n_sessions - n_suspicious
    # suspicious plans cycle archetypes: 3 of 5 draw from the suspicious pool,
    # 2 of 5 from business locations; double everything for slack
    return GeneratorProfile(
        n_sessions=n_sessions,
        suspicious_fraction=suspicious_fraction,
        seed=seed,
        overlap=overlap,
        session_length_range=session_length_range,
        date_days=date_days,
        business_locations=_scale_pool(
            BUSINESS_LOCATIONS, 2 * (n_benign + n_suspicious), date_days
        ),
        foreign_benign_locations=_scale_pool(
            FOREIGN_BENIGN_LOCATIONS, 2 * n_benign, date_days
        ),
        suspicious_locations=_scale_pool(
            SUSPICIOUS_LOCATIONS, 2 * n_suspicious, date_days
        ),
    )


@dataclass(slots=True)
class PlanTruth:
    plan_id: str
    session_id: str
    label: int
    rule_id: str | None
    country: str
    city: str
    date: str
    length: int
    record_digest: str


@dataclass(slots=True)
class GroundTruth:
    plans: dict[str, PlanTruth] = field(default_factory=dict)

    def suspicious_session_ids(self) -> set[str]:
        return {p.session_id for p in self.plans.values() if p.label == 1}

    def labels_by_session_id(self) -> dict[str, int]:
        return {p.session_id: p.label for p in self.plans.values()}


def _validate(profile: GeneratorProfile, config: RuleConfig) -> None:
    lo, hi = profile.session_length_range
    if lo < 3 or hi < lo:
        raise InfeasibleProfile(f"bad session_length_range: {profile.session_length_range}")
    if not (0.0 <= profile.suspicious_fraction <= 1.0):
        raise InfeasibleProfile("suspicious_fraction must lie in [0, 1]")
    if not profile.benign_archetypes or not profile.suspicious_archetypes:
        raise InfeasibleProfile("archetype pools must be non-empty")
    locations = (
        set(profile.business_locations)
        | set(profile.foreign_benign_locations)
        | set(profile.suspicious_locations)
    )
    if profile.n_sessions > len(locations) * profile.date_days:
        raise InfeasibleProfile(
            f"{profile.n_sessions} sessions exceed "
            f"{len(locations) * profile.date_days} (location, date) slots"
        )
    for country, _ in profile.business_locations:
        if country not in config.business_countries:
            raise InfeasibleProfile(f"business location in non-business country: {country}")
    for country, _ in profile.suspicious_locations:
        if country in config.business_countries:
            raise InfeasibleProfile(f"suspicious location in business country: {country}")


class _SlotAllocator:
    """Hands out unique (location, date) slots, deterministically."""

    def __init__(self, rng: SplitMix64, days: int, start: Date):
        self.rng = rng
        self.days = days
        self.start = start
        self.used: dict[tuple[str, str], set[int]] = {}

    def take(self, pool: Sequence[tuple[str, str]]) -> tuple[str, str, Date]:
        first = self.rng.below(len(pool))
        for i in range(len(pool)):
            country, city = pool[(first + i) % len(pool)]
            taken = self.used.setdefault((country, city), set())
            if len(taken) >= self.days:
                continue
            offset = self.rng.below(self.days)
            for j in range(self.days):
                day = (offset + j) % self.days
                if day not in taken:
                    taken.add(day)
                    return country, city, self.start + timedelta(days=day)
        raise InfeasibleProfile("location/date slots exhausted")


def _plan_times(rng: SplitMix64, length: int) -> list[tuple[int, int]]:
    # strictly increasing minutes within one day, so chronological order is total
    max_start = max(0, 1439 - 3 * length)
    minute = rng.below(max_start + 1)
    out = []
    for _ in range(length):
        out.append((minute // 60, minute % 60))
        headroom = 1439 - minute
        minute += 1 if headroom <= length else rng.randint(1, 3)
    return out


def _render_url(tokens: tuple[str, ...]) -> str:
    return "http://www.example.com/" + "/".join(tokens)


def generate_corpus(
    profile: GeneratorProfile,
) -> tuple[list[TrafficRecord], GroundTruth, RuleConfig]:
    """Generate a shuffled record stream plus ground truth and companion rules."""
    config = rule_config_from_obj(DEFAULT_RULE_CONFIG_OBJ)
    _validate(profile, config)

    rng = SplitMix64(profile.seed)
    slots = _SlotAllocator(rng, profile.date_days, profile.date_start)
    n_suspicious = int(profile.n_sessions * profile.suspicious_fraction + 0.5)

    benign_any = tuple(profile.business_locations) + tuple(profile.foreign_benign_locations)
    pools = {
        "business": tuple(profile.business_locations),
        "foreign_benign": tuple(profile.foreign_benign_locations),
        "foreign_suspicious": tuple(profile.suspicious_locations),
        "benign_any": benign_any,
    }
    # pages benign sessions may borrow under overlap > 0: suspicious pool
    # pages that do not themselves match any rule page category
    from .rules import page_matches

    flagged_patterns = tuple(
        pattern for patterns in config.page_categories.values() for pattern in patterns
    )
    benign_decoy_pages = tuple(
        p
        for a in profile.suspicious_archetypes
        for p in a.pages
        if not page_matches(p, flagged_patterns)
    )
    benign_pool_pages = tuple(p for a in profile.benign_archetypes for p in a.pages)
    benign_pool_keywords = tuple(k for a in profile.benign_archetypes for k in a.keywords)

    truth = GroundTruth()
    all_records: list[TrafficRecord] = []

    for plan_idx in range(profile.n_sessions):
        suspicious = plan_idx < n_suspicious
        if suspicious:
            archetype = profile.suspicious_archetypes[
                plan_idx % len(profile.suspicious_archetypes)
            ]
        else:
            archetype = rng.choice(profile.benign_archetypes)

        country, city, day = slots.take(pools[archetype.location_pool])

        if archetype.rule_kind == "volume_threshold":
            length = config.max_records + 1 + rng.below(10)
        elif archetype.rule_kind == "repeat_employee_only_access":
            length = max(config.min_occurrences, profile.session_length_range[0]) + rng.below(4)
        else:
            length = rng.randint(*profile.session_length_range)

        times = _plan_times(rng, length)
        n_triggers = 0
        if archetype.rule_kind == "repeat_employee_only_access":
            n_triggers = config.min_occurrences
        elif archetype.trigger_pages or archetype.trigger_keywords:
            n_triggers = 1
        trigger_at = set()
        while len(trigger_at) < n_triggers:
            trigger_at.add(rng.below(length))

        records: list[TrafficRecord] = []
        for i in range(length):
            is_trigger = i in trigger_at
            if is_trigger and archetype.trigger_pages:
                pages = rng.choice(archetype.trigger_pages)
            elif not is_trigger and profile.overlap > 0.0 and rng.random() < profile.overlap:
                pages = rng.choice(benign_pool_pages if suspicious else benign_decoy_pages)
            else:
                pages = rng.choice(archetype.pages)

            if is_trigger and archetype.trigger_keywords:
                keywords = (rng.choice(archetype.trigger_keywords),)
            elif rng.random() < 0.4:
                if not is_trigger and profile.overlap > 0.0 and suspicious \
                        and rng.random() < profile.overlap:
                    keywords = (rng.choice(benign_pool_keywords),)
                else:
                    keywords = (rng.choice(archetype.keywords),)
            else:
                keywords = ()

            hour, minute = times[i]
            records.append(
                TrafficRecord(
                    record_id=f"s{profile.seed}-{plan_idx}-{i}",
                    timestamp=datetime(day.year, day.month, day.day, hour, minute),
                    country=country,
                    city=city,
                    raw_url=_render_url(pages),
                    url_tokens=pages,
                    keywords=keywords,
                    duration_seconds=rng.below(600),
                )
            )

        key = SessionKey(country, city, day)
        session_id = _session_id(key, records[0].record_id)
        digest = hashlib.sha256()
        for r in records:
            digest.update(
                f"{r.record_id}|{r.timestamp.isoformat()}|{r.raw_url}|"
                f"{' '.join(r.keywords)}|{r.duration_seconds}\n".encode("utf-8")
            )
        plan_id = f"plan-{plan_idx:06d}"
        truth.plans[plan_id] = PlanTruth(
            plan_id=plan_id,
            session_id=session_id,
            label=1 if suspicious else 0,
            rule_id=archetype.rule_kind,
            country=country,
            city=city,
            date=day.isoformat(),
            length=length,
            record_digest=digest.hexdigest(),
        )
        all_records.extend(records)

    rng.shuffle(all_records)
    return all_records, truth, config


def truth_to_obj(truth: GroundTruth) -> dict:
    return {
        "plans": {
            pid: {
                "session_id": p.session_id,
                "label": p.label,
                "rule_id": p.rule_id,
                "country": p.country,
                "city": p.city,
                "date": p.date,
                "length": p.length,
                "record_digest": p.record_digest,
            }
            for pid, p in sorted(truth.plans.items())
        }
    }


def truth_from_obj(obj: dict) -> GroundTruth:
    truth = GroundTruth()
    for pid, p in obj["plans"].items():
        truth.plans[pid] = PlanTruth(plan_id=pid, **p)
    return truth


def write_corpus(profile: GeneratorProfile, out_dir) -> dict:
    """Emit records.ndjson, truth.json and rules.json into ``out_dir``."""
    import os

    records, truth, config = generate_corpus(profile)
    os.makedirs(out_dir, exist_ok=True)
    records_path = os.path.join(out_dir, "records.ndjson")
    with open(records_path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record_to_obj(record), sort_keys=True))
            f.write("\n")
    with open(os.path.join(out_dir, "truth.json"), "w", encoding="utf-8") as f:
        json.dump(truth_to_obj(truth), f, sort_keys=True, indent=2)
        f.write("\n")
    from .rules import rule_config_to_obj

    with open(os.path.join(out_dir, "rules.json"), "w", encoding="utf-8") as f:
        json.dump(rule_config_to_obj(config), f, sort_keys=True, indent=2)
        f.write("\n")
    return {
        "records": len(records),
        "sessions": len(truth.plans),
        "suspicious": sum(1 for p in truth.plans.values() if p.label == 1),
    }
