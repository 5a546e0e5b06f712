"""JSON run reports with a stable layout.

Reports are plain dicts with a fixed key order so identical runs produce
byte-identical files; wall-clock timings live under their own key and are
the only nondeterministic part.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from . import __version__


def build_report(tool: str, config: dict, results: dict,
                 warnings: list[str] | None = None,
                 timings: dict[str, float] | None = None) -> dict:
    return {
        "tool": tool,
        "version": __version__,
        "config": config,
        "results": results,
        "warnings": list(warnings or []),
        "timings": {k: round(v, 6) for k, v in (timings or {}).items()},
    }


def write_report(report: dict, path: str | Path | None) -> None:
    """Write to path, or stdout when no path is given."""
    text = json.dumps(report, indent=2)
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def strip_timings(report: dict) -> dict:
    """Copy without the timing fields, for byte-identity comparisons."""
    out = dict(report)
    out["timings"] = {}
    return out
