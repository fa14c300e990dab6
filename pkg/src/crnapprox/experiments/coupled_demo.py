"""Single KMT-coupled CTMC/diffusion paths for the metabolism and bistable networks."""

from __future__ import annotations

import logging
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

from ..config import SimConfig
from ..coupled import simulate_coupled, write_coupled_csv
from ..models import load_bundled_model

LOGGER = logging.getLogger(__name__)


class CoupledCase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    volume: float = Field(gt=0)
    horizon: float = Field(gt=0)
    x0: tuple[float, float]
    em_step: float = Field(default=1e-3, gt=0)
    kmt_step: float = Field(gt=0)
    upper_bounds: tuple[float, float]


class CoupledDemoSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=11, ge=0)
    m: int = Field(default=3, ge=0)
    metabolism: CoupledCase = CoupledCase(
        volume=600.0, horizon=2.0, x0=(1.1, 1.1), kmt_step=0.25, upper_bounds=(2.0, 2.0)
    )
    bistable: CoupledCase = CoupledCase(
        volume=100.0, horizon=3.5, x0=(2.0, 0.5), kmt_step=0.1, upper_bounds=(10.0, 10.0)
    )


def run(settings: CoupledDemoSettings, output_dir: Path, workers: int = 1) -> list[Path]:
    del workers
    cases = {
        "metabolism": (load_bundled_model("metabolism", m=settings.m), settings.metabolism),
        "bistable": (load_bundled_model("bistable"), settings.bistable),
    }
    written = []
    for name, (network, case) in cases.items():
        config = SimConfig(
            volume=case.volume,
            x0=case.x0,
            horizon=case.horizon,
            em_step=case.em_step,
            kmt_step=case.kmt_step,
            domain_upper_bounds=case.upper_bounds,
            seed=settings.seed,
        )
        run_ = simulate_coupled(network, config)
        if run_.exit_time is not None:
            LOGGER.warning("%s: coupled run left the domain at t=%.6g", name, run_.exit_time)
        path = output_dir / f"coupled_{name}.csv"
        write_coupled_csv(run_, path)
        LOGGER.info("%s: sup distance %.6g -> %s", name, run_.sup_distance, path.name)
        written.append(path)
    return written
