"""Synthetic advisory corpus with realistic per-severity phrasing."""

import json
import os
import random

LABELS = ("low", "medium", "high", "critical")

TEMPLATES = {
    "low": (
        "Minor cosmetic misalignment in the {place} dialog",
        "Typo in the {place} help text confuses new users",
        "Verbose debug logging clutters the {place} log output",
        "Tooltip in the {place} view shows a stale value",
    ),
    "medium": (
        "Open redirect on the {place} page enables phishing",
        "Information disclosure of internal hostnames via the {place} endpoint",
        "Missing rate limiting on the {place} endpoint allows user enumeration",
        "Improper cache headers on the {place} page leak session metadata",
    ),
    "high": (
        "SQL injection in the {place} endpoint allows database extraction",
        "Path traversal in the {place} handler reads arbitrary files",
        "Stored cross-site scripting in the {place} renderer",
        "Heap buffer overflow in the {place} parser corrupts memory",
    ),
    "critical": (
        "Unauthenticated remote code execution with root privileges in the {place} service",
        "Pre-auth remote code execution grants root privileges on the {place} host",
        "Wormable remote code execution in the {place} daemon runs as root",
        "Unauthenticated takeover of the {place} controller allows remote code execution as root",
    ),
}

PLACES = (
    "login", "search", "admin", "upload", "report", "billing",
    "gateway", "agent", "scheduler", "inventory", "export", "webhook",
)

FILLERS = (
    "Affected deployments should update promptly.",
    "The issue was found during a routine audit.",
    "All versions prior to the fixed release are affected.",
    "A patch is available from the vendor.",
    "No workaround is known at this time.",
)

SCORE_BANDS = {"low": (1, 39), "medium": (40, 69), "high": (70, 89), "critical": (90, 100)}


def make_corpus(n: int, seed: int) -> list[dict]:
    """n OSV entries cycling through the four labels."""
    rng = random.Random(seed)
    entries = []
    for i in range(n):
        label = LABELS[i % len(LABELS)]
        text = rng.choice(TEMPLATES[label]).format(place=rng.choice(PLACES))
        details = f"{text}. {rng.choice(FILLERS)}"
        lo, hi = SCORE_BANDS[label]
        score = rng.randint(lo, hi) / 10.0
        entries.append({
            "schema_version": "1.6.0",
            "id": f"VF-2024-{i:05d}",
            "summary": f"Security advisory {i}",
            "details": details,
            "severity": [{"type": "CVSS_V3", "score": f"{score:.1f}"}],
        })
    return entries


def expected_label(entry: dict) -> str:
    score = float(entry["severity"][0]["score"])
    tenths = round(score * 10)
    for label in LABELS:
        lo, hi = SCORE_BANDS[label]
        if lo <= tenths <= hi:
            return label
    return "low"


def write_osv_feed(entries: list[dict], directory: str, name: str = "advisories.json") -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(entries, fh)
    return path
