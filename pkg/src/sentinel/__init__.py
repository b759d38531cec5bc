"""Web-traffic forensics pipeline: sessionization, rule-based anomaly
detection, linear-model triage, and a synthetic corpus generator."""

__version__ = "0.1.0"
