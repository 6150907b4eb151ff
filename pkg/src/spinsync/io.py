"""CSV and JSON-sidecar emission.

Every result file is paired with a sidecar <name>.json recording the
resolved configuration, tool version and tolerances, so a run can be
reproduced from its outputs alone.  CSV output is RFC-4180-style: header
row, CRLF line endings, '.' decimal separator, UTF-8.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from . import __version__

__all__ = ["format_value", "write_csv", "write_sidecar"]


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return f"{v.real!r}{'+' if v.imag >= 0 else '-'}{abs(v.imag)!r}j"
    if v is None:
        return ""
    return str(v)


def write_csv(path: str | Path, fieldnames: list[str], rows: list[dict]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([format_value(row.get(k)) for k in fieldnames])


def write_sidecar(path: str | Path, config: dict, **extra):
    """JSON sidecar next to a result file (provenance record)."""
    path = Path(path)
    doc = {"version": __version__, "config": config}
    doc.update(extra)
    side = path.with_suffix(".json")
    side.parent.mkdir(parents=True, exist_ok=True)
    side.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return side
