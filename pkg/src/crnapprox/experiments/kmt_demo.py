"""Worked KMT example on sixteen fixed normals: every matrix of the construction as CSV.

``kmt_paths.csv`` carries the paired paths with two extra columns:

    k,t,poisson_count,N,W

``t`` is ``k * Delta``, ``poisson_count`` is the count of increment ``k`` (0 at
``k = 0``) and ``N`` / ``W`` are the cumulative Poisson and drifted Wiener
values at ``t``. Readers that want the bare ``k,N,W`` table select those columns.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..kmt import DyadicIncrements, assemble_paired_paths, build_dyadic_sums, fill_schedule, kmt_construct

LOGGER = logging.getLogger(__name__)

TOY_NORMALS = [
    -0.18, -0.93, -0.78, -1.65, -0.41, -1.10, -1.69, 2.52,
    1.40, 0.18, -0.96, 1.26, 1.48, 0.52, -2.25, 0.47,
]  # fmt: skip


class KmtDemoSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    normals: list[float] = Field(default_factory=lambda: list(TOY_NORMALS))
    delta: float = Field(default=1.0, gt=0)

    @field_validator("normals")
    @classmethod
    def _power_of_two(cls, v: list[float]) -> list[float]:
        if len(v) < 2 or len(v) & (len(v) - 1):
            raise ValueError(f"number of normals must be a power of two >= 2, got {len(v)}")
        return v


def _write_matrix(path: Path, matrix: np.ndarray, row_label: str, row_offset: int, fmt: str) -> Path:
    """Rows ``<row_label>=row_offset+i``, columns ``k=1..``; only each row's valid cells."""
    lines = [f"{row_label},k,value"]
    for i, row in enumerate(matrix):
        j = i + row_offset
        width = _row_width(matrix.shape[1], j, row_label)
        lines.extend(f"{j},{k + 1},{row[k]:{fmt}}" for k in range(width))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _row_width(columns: int, index: int, row_label: str) -> int:
    # V/U rows hold n/2**j - 1 cells; Vtilde/Utilde rows hold n/2**q - 1
    n = columns + 1 if row_label == "j" else 2 * (columns + 1)
    return n // 2**index - 1


def run(settings: KmtDemoSettings, output_dir: Path, workers: int = 1) -> list[Path]:
    del workers
    normals = DyadicIncrements(settings.delta, np.asarray(settings.normals, dtype=float))
    sums = build_dyadic_sums(normals)
    construction = kmt_construct(normals)
    counts = construction.increments.counts()
    paired = assemble_paired_paths(normals, construction.increments, channel="toy")
    LOGGER.info("KMT demo: n=%d, %d levels, first increment %.6g", normals.n, normals.levels, construction.first_increment)

    inputs = output_dir / "kmt_inputs.csv"
    inputs.write_text(
        "i,normal\n" + "".join(f"{i},{value:.12g}\n" for i, value in enumerate(normals.values, start=1)),
        encoding="utf-8",
    )
    written = [
        inputs,
        _write_matrix(output_dir / "kmt_v.csv", sums.v_matrix, "j", 0, ".12g"),
        _write_matrix(output_dir / "kmt_vtilde.csv", sums.vtilde_matrix, "q", 1, ".12g"),
        _write_matrix(output_dir / "kmt_u.csv", construction.u_matrix, "j", 0, ".12g"),
        _write_matrix(output_dir / "kmt_utilde.csv", construction.u_tilde, "q", 1, ".12g"),
    ]

    summary = output_dir / "kmt_first_increment.csv"
    summary.write_text(f"first_increment\n{construction.first_increment:.12g}\n", encoding="utf-8")
    written.append(summary)

    paths = output_dir / "kmt_paths.csv"
    lines = ["k,t,poisson_count,N,W"]
    for k in range(paired.n + 1):
        count = int(counts[k - 1]) if k else 0
        lines.append(f"{k},{k * paired.delta:.12g},{count},{paired.poisson_path[k]:.12g},{paired.wiener_path[k]:.12g}")
    paths.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(paths)

    schedule = output_dir / "kmt_schedule.csv"
    lines = ["step,first_column,last_column"]
    lines.extend(f"{step},{block.start},{block.stop - 1}" for step, block in enumerate(fill_schedule(normals.levels), 1))
    schedule.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(schedule)
    return written
