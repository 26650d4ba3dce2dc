"""Run reports: JSON serialization (deterministic, round-trip stable),
config echo and hashing, relaxation-history CSV."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

from . import __version__


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()[:16]


def save_report(report: dict, path) -> None:
    Path(path).write_text(canonical_json(report) + "\n")


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


def new_report(config: dict) -> dict:
    return {
        "artifact": {"name": "varifold-atlas", "version": __version__},
        "config": config,
        "config_hash": config_hash(config),
    }


def write_relax_csv(path, area_history, residual_history) -> None:
    """Per-iteration delimited record: iteration, area, residual."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "area", "residual"])
        n = max(len(area_history), len(residual_history))
        for i in range(n):
            a = area_history[i] if i < len(area_history) else ""
            r = residual_history[i] if i < len(residual_history) else ""
            w.writerow([i, a, r])
