"""Declarative session-flagging rules compiled from a JSON config.

Five rule kinds are supported, each binding to named keyword or page
categories defined in the config:

* sensitive_search_foreign — foreign traffic searching sensitive terms
* employee_only_access — foreign access to employee-only pages
* repeat_employee_only_access — repeated employee-only access from one location
* volume_threshold — record volume above a configured ceiling
* engagement_page_foreign — foreign visits to newsletter/enquiry pages
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError
from .sessionize import UserSession

RULE_KINDS = (
    "sensitive_search_foreign",
    "employee_only_access",
    "repeat_employee_only_access",
    "volume_threshold",
    "engagement_page_foreign",
)

SENSITIVE_KEYWORD_CATEGORIES = (
    "employee_bio",
    "employee_contact",
    "sensitive_product",
    "sensitive_service",
)
ENGAGEMENT_PAGE_CATEGORIES = ("enquiry_form", "newsletter_registration")
EMPLOYEE_ONLY_CATEGORY = "employee_only"

CONFIG_KEYS = (
    "business_countries",
    "keyword_categories",
    "page_categories",
    "repeat_access",
    "volume_threshold",
)

VOLUME_WINDOWS = ("daily", "weekly", "monthly")


@dataclass(slots=True)
class RuleConfig:
    business_countries: frozenset[str]
    keyword_categories: dict[str, frozenset[str]]
    page_categories: dict[str, tuple[tuple[str, ...], ...]]
    min_occurrences: int
    window_days: int
    max_records: int
    volume_window: str


@dataclass(slots=True)
class Rule:
    rule_id: str
    kind: str
    params: dict


@dataclass(slots=True)
class RuleSet:
    config: RuleConfig
    rules: tuple[Rule, ...]

    def kinds(self) -> set[str]:
        return {r.kind for r in self.rules}


@dataclass(slots=True)
class RuleMatch:
    rule_id: str
    session_id: str
    evidence: list[tuple[str, str]]


@dataclass(slots=True)
class DetectionReport:
    total_sessions: int
    flagged_sessions: int
    fraction: float
    matches: list[RuleMatch]

    def flagged_ids(self) -> set[str]:
        return {m.session_id for m in self.matches}


@dataclass(slots=True)
class AccessHistory:
    """First-pass aggregates consumed by the history-dependent rules."""

    employee_access_dates: dict[tuple[str, str], Counter] = field(default_factory=dict)
    location_volume: dict[tuple[str, str, str], int] = field(default_factory=dict)


def _normalize_pattern(pattern) -> tuple[str, ...]:
    if isinstance(pattern, str):
        tokens = [t.lower() for t in pattern.split("/") if t]
    else:
        tokens = [str(t).lower() for t in pattern if str(t)]
    if not tokens:
        raise ConfigError("page_categories", "empty page pattern")
    return tuple(tokens)


def rule_config_from_obj(obj: Mapping) -> RuleConfig:
    """Validate and normalize the raw JSON config document."""
    unknown = set(obj) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown config key: {sorted(unknown)[0]}")
    missing = [k for k in CONFIG_KEYS if k not in obj]
    if missing:
        raise ConfigError(missing[0], f"missing config key: {missing[0]}")

    business = frozenset(str(c) for c in obj["business_countries"])
    if not business:
        raise ConfigError("business_countries", "business_countries must not be empty")

    keyword_categories = {
        str(name): frozenset(str(t).lower() for t in tokens)
        for name, tokens in obj["keyword_categories"].items()
    }
    page_categories = {
        str(name): tuple(_normalize_pattern(p) for p in patterns)
        for name, patterns in obj["page_categories"].items()
    }

    repeat = obj["repeat_access"]
    min_occurrences = int(repeat.get("min_occurrences", 0))
    window_days = int(repeat.get("window_days", 0))
    if min_occurrences < 2:
        raise ConfigError("repeat_access", "min_occurrences must be >= 2")
    if window_days < 1:
        raise ConfigError("repeat_access", "window_days must be >= 1")

    volume = obj["volume_threshold"]
    max_records = int(volume.get("max_records", 0))
    if max_records < 1:
        raise ConfigError("volume_threshold", "max_records must be >= 1")
    volume_window = str(volume.get("window", "daily"))
    if volume_window not in VOLUME_WINDOWS:
        raise ConfigError("volume_threshold", f"unsupported window: {volume_window}")

    return RuleConfig(
        business_countries=business,
        keyword_categories=keyword_categories,
        page_categories=page_categories,
        min_occurrences=min_occurrences,
        window_days=window_days,
        max_records=max_records,
        volume_window=volume_window,
    )


def load_rule_config(path) -> RuleConfig:
    with open(path, encoding="utf-8") as f:
        return rule_config_from_obj(json.load(f))


def rule_config_to_obj(config: RuleConfig) -> dict:
    return {
        "business_countries": sorted(config.business_countries),
        "keyword_categories": {
            name: sorted(tokens) for name, tokens in sorted(config.keyword_categories.items())
        },
        "page_categories": {
            name: ["/".join(p) for p in patterns]
            for name, patterns in sorted(config.page_categories.items())
        },
        "repeat_access": {
            "min_occurrences": config.min_occurrences,
            "window_days": config.window_days,
        },
        "volume_threshold": {
            "max_records": config.max_records,
            "window": config.volume_window,
        },
    }


def compile_ruleset(
    config: RuleConfig | Mapping,
    keyword_bindings: Sequence[str] = SENSITIVE_KEYWORD_CATEGORIES,
    engagement_bindings: Sequence[str] = ENGAGEMENT_PAGE_CATEGORIES,
    employee_only_binding: str = EMPLOYEE_ONLY_CATEGORY,
    strict_bindings: bool = False,
) -> RuleSet:
    """Instantiate one rule per pattern family present in the config.

    With the default bindings, a rule kind is skipped when none of its
    referenced categories are defined. Callers passing custom bindings get
    strict resolution: any binding naming an undefined category raises
    ConfigError with that name.
    """
    if not isinstance(config, RuleConfig):
        config = rule_config_from_obj(config)

    custom = (
        tuple(keyword_bindings) != SENSITIVE_KEYWORD_CATEGORIES
        or tuple(engagement_bindings) != ENGAGEMENT_PAGE_CATEGORIES
        or employee_only_binding != EMPLOYEE_ONLY_CATEGORY
        or strict_bindings
    )

    def resolve(names: Sequence[str], defined: Mapping) -> list[str]:
        present = []
        for name in names:
            if name in defined:
                present.append(name)
            elif custom:
                raise ConfigError(name, f"rule binding references undefined category: {name}")
        return present

    rules: list[Rule] = []

    kw_cats = resolve(keyword_bindings, config.keyword_categories)
    if kw_cats:
        rules.append(
            Rule("sensitive_search_foreign", "sensitive_search_foreign",
                 {"keyword_categories": kw_cats})
        )

    emp_cats = resolve([employee_only_binding], config.page_categories)
    if emp_cats:
        rules.append(
            Rule("employee_only_access", "employee_only_access",
                 {"page_category": emp_cats[0]})
        )
        rules.append(
            Rule("repeat_employee_only_access", "repeat_employee_only_access",
                 {"page_category": emp_cats[0],
                  "min_occurrences": config.min_occurrences,
                  "window_days": config.window_days})
        )

    rules.append(
        Rule("volume_threshold", "volume_threshold",
             {"max_records": config.max_records, "window": config.volume_window})
    )

    eng_cats = resolve(engagement_bindings, config.page_categories)
    if eng_cats:
        rules.append(
            Rule("engagement_page_foreign", "engagement_page_foreign",
                 {"page_categories": eng_cats})
        )

    return RuleSet(config=config, rules=tuple(rules))


def page_matches(url_tokens: Sequence[str], patterns: Iterable[tuple[str, ...]]) -> bool:
    """Token-prefix match: pattern (a,b) matches any page path starting (a,b,...)."""
    for pattern in patterns:
        n = len(pattern)
        if len(url_tokens) >= n and tuple(url_tokens[:n]) == pattern:
            return True
    return False


def _volume_bucket(day: Date, window: str) -> str:
    if window == "daily":
        return day.isoformat()
    if window == "weekly":
        return Date.fromordinal(day.toordinal() - day.weekday()).isoformat()
    return f"{day.year:04d}-{day.month:02d}"


def _employee_records(session: UserSession, rule_set: RuleSet, category: str):
    patterns = rule_set.config.page_categories.get(category, ())
    return [r for r in session.records if page_matches(r.url_tokens, patterns)]


def build_history(rule_set: RuleSet, sessions: Iterable[UserSession]) -> AccessHistory:
    """First pass: per-location employee-only access dates and volume counts."""
    history = AccessHistory()
    config = rule_set.config
    emp_patterns = config.page_categories.get(EMPLOYEE_ONLY_CATEGORY, ())
    for session in sessions:
        loc = (session.key.country, session.key.city)
        bucket = (loc[0], loc[1], _volume_bucket(session.key.date, config.volume_window))
        history.location_volume[bucket] = (
            history.location_volume.get(bucket, 0) + len(session.records)
        )
        if emp_patterns:
            n_emp = sum(
                1 for r in session.records if page_matches(r.url_tokens, emp_patterns)
            )
            if n_emp:
                history.employee_access_dates.setdefault(loc, Counter())[
                    session.key.date
                ] += n_emp
    return history


def evaluate_session(
    rule_set: RuleSet, session: UserSession, history: AccessHistory
) -> list[RuleMatch]:
    """Evaluate every compiled rule against one session."""
    config = rule_set.config
    foreign = session.key.country not in config.business_countries
    matches: list[RuleMatch] = []

    for rule in rule_set.rules:
        evidence: list[tuple[str, str]] = []

        if rule.kind == "sensitive_search_foreign":
            if not foreign:
                continue
            sensitive = set()
            for cat in rule.params["keyword_categories"]:
                sensitive |= config.keyword_categories[cat]
            for record in session.records:
                for token in record.keywords:
                    if token in sensitive:
                        evidence.append((record.record_id, token))

        elif rule.kind == "employee_only_access":
            if not foreign:
                continue
            for record in _employee_records(session, rule_set, rule.params["page_category"]):
                evidence.append((record.record_id, rule.params["page_category"]))

        elif rule.kind == "repeat_employee_only_access":
            own = _employee_records(session, rule_set, rule.params["page_category"])
            if not own:
                continue
            loc = (session.key.country, session.key.city)
            dates = history.employee_access_dates.get(loc, {})
            window_start = session.key.date - timedelta(days=rule.params["window_days"] - 1)
            total = sum(
                count
                for day, count in dates.items()
                if window_start <= day <= session.key.date
            )
            if total >= rule.params["min_occurrences"]:
                for record in own:
                    evidence.append((record.record_id, rule.params["page_category"]))

        elif rule.kind == "volume_threshold":
            loc_count = history.location_volume.get(
                (
                    session.key.country,
                    session.key.city,
                    _volume_bucket(session.key.date, rule.params["window"]),
                ),
                0,
            )
            if len(session.records) > rule.params["max_records"]:
                reason = "session_volume"
            elif loc_count > rule.params["max_records"]:
                reason = "location_volume"
            else:
                continue
            for record in session.records:
                evidence.append((record.record_id, reason))

        elif rule.kind == "engagement_page_foreign":
            if not foreign:
                continue
            for cat in rule.params["page_categories"]:
                patterns = config.page_categories[cat]
                for record in session.records:
                    if page_matches(record.url_tokens, patterns):
                        evidence.append((record.record_id, cat))

        if evidence:
            matches.append(RuleMatch(rule.rule_id, session.session_id, evidence))

    return matches


def run_detection(rule_set: RuleSet, sessions: Sequence[UserSession]) -> DetectionReport:
    """Two-pass detection: build location history, then evaluate each session."""
    history = build_history(rule_set, sessions)
    matches: list[RuleMatch] = []
    for session in sessions:
        matches.extend(evaluate_session(rule_set, session, history))
    flagged = len({m.session_id for m in matches})
    total = len(sessions)
    return DetectionReport(
        total_sessions=total,
        flagged_sessions=flagged,
        fraction=flagged / total if total else 0.0,
        matches=matches,
    )


def write_detection_ndjson(report: DetectionReport, stream) -> None:
    """Summary object first, then one RuleMatch per line."""
    stream.write(
        json.dumps(
            {
                "total_sessions": report.total_sessions,
                "flagged_sessions": report.flagged_sessions,
                "fraction": report.fraction,
            },
            sort_keys=True,
        )
        + "\n"
    )
    for match in report.matches:
        stream.write(
            json.dumps(
                {
                    "rule_id": match.rule_id,
                    "session_id": match.session_id,
                    "evidence": [list(e) for e in match.evidence],
                },
                sort_keys=True,
            )
            + "\n"
        )


def read_detection_ndjson(stream) -> DetectionReport:
    lines = [line for line in stream if line.strip()]
    summary = json.loads(lines[0])
    matches = [
        RuleMatch(
            rule_id=obj["rule_id"],
            session_id=obj["session_id"],
            evidence=[tuple(e) for e in obj["evidence"]],
        )
        for obj in (json.loads(line) for line in lines[1:])
    ]
    return DetectionReport(
        total_sessions=summary["total_sessions"],
        flagged_sessions=summary["flagged_sessions"],
        fraction=summary["fraction"],
        matches=matches,
    )
