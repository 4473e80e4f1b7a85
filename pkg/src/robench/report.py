"""Persistent run reports: everything a robustness run concluded, in JSON.

A report is self-contained: it embeds the per-level accuracies, penalties
and the reference accuracy, so the stability vector can be recomputed
offline from the report alone (and `verify_report` checks exactly that).
Infinities are serialized as the string "inf" to stay inside strict JSON.
"""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .distortions import KINDS
from .stability import order_ladder, stability_report, stability_vector

SCHEMA_VERSION = 1


def _sanitize(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    return value


def build_run_report(
    detector_id: str,
    reference_id: str,
    ladders: dict,
    omega: float,
    lam: float,
    stats_rows: list | None = None,
    created_utc: str | None = None,
) -> dict:
    """Assemble the report dict for one detector's full robustness run.

    ``ladders`` maps every distortion family to its LadderAccuracies;
    ``stats_rows`` is an optional list of per-level quality-stats dicts.
    """
    body = stability_report(detector_id, ladders, omega)
    if created_utc is None:
        created_utc = datetime.now(timezone.utc).isoformat()
    report = {
        "schema": SCHEMA_VERSION,
        "toolkit_version": __version__,
        "created_utc": created_utc,
        "detector_id": body["detector_id"],
        "reference_id": reference_id,
        "a_ref": body["a_ref"],
        "omega": body["omega"],
        "lambda": lam,
        "psnr_scope": "all-channel",
        "per_kind": body["per_kind"],
        "stability": {kind: body["per_kind"][kind]["s"] for kind in KINDS},
        "ladder_stats": stats_rows,
    }
    return report


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_sanitize(report), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def ladders_from_report(report: dict) -> dict:
    """Rebuild the LadderAccuracies of every family from an embedded report."""
    ladders = {}
    for kind in KINDS:
        entries = [
            (level["param"], level["a"]) for level in report["per_kind"][kind]["levels"]
        ]
        ladders[kind] = order_ladder(kind, entries, report["a_ref"])
    return ladders


def verify_report(report: dict) -> bool:
    """True iff recomputing stability from the embedded accuracies reproduces
    the embedded stability vector exactly."""
    ladders = ladders_from_report(report)
    vector, _ = stability_vector(ladders, report["omega"])
    return all(vector.component(kind) == report["stability"][kind] for kind in KINDS)
