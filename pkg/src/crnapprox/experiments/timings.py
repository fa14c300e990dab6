"""Wall-clock reports for experiments that compare simulation methods."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Mapping

LOGGER = logging.getLogger(__name__)


def report_timings(timings: Mapping[str, float], target: str | Path, reference: str = "ssa") -> Path:
    """
    Write ``method,wall_clock_s,relative_to_<reference>`` rows.

    The relative column is blank when the reference method was not timed.
    Absolute times depend on the machine; the ratio is the meaningful figure.
    """
    path = Path(target)
    base = timings.get(reference)
    lines = [f"method,wall_clock_s,relative_to_{reference}"]
    for method, seconds in timings.items():
        relative = f"{seconds / base:.6g}" if base else ""
        lines.append(f"{method},{seconds:.6f},{relative}")
        LOGGER.info("%-8s %10.3f s%s", method, seconds, f"  (x{relative} of {reference})" if relative else "")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def timing_ratio(timings: Mapping[str, float], numerator: str = "em", denominator: str = "ssa") -> float | None:
    if timings.get(denominator) and numerator in timings:
        return timings[numerator] / timings[denominator]
    return None
