"""
Integration tests for the bundled experiments.

Every experiment runs here with reduced settings; the full-scale studies
live in test_acceptance.py.
"""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest

pytestmark = pytest.mark.integration

from crnapprox.coupled import read_coupled_csv
from crnapprox.errors import ConfigurationError
from crnapprox.experiments import ExperimentName, ExperimentSpec, resolve_settings, run_experiment
from crnapprox.experiments.basins import stable_equilibria
from crnapprox.experiments.timings import report_timings, timing_ratio
from crnapprox.models import load_bundled_model
from crnapprox.trajectory import read_csv, validate_trajectory


@pytest.fixture
def out_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


def _run(name, out_dir, **overrides):
    return run_experiment(ExperimentSpec(name=name, overrides=overrides, output_dir=out_dir))


# ========== Settings Tests ==========

def test_defaults_resolve_for_every_experiment():
    """Test that config/experiments.yml validates against every settings model."""
    for name in ExperimentName:
        resolve_settings(ExperimentSpec(name=name))


def test_defaults_match_study_setup():
    """Test V = 600 for metabolism and 10**4 replications at t = 20 for the basins."""
    metabolism = resolve_settings(ExperimentSpec(name="metabolism"))
    basins = resolve_settings(ExperimentSpec(name="bistable-basins"))
    assert metabolism.volume == 600
    assert basins.replications == 10_000
    assert basins.horizon == 20
    assert basins.volume == 100


def test_unknown_override():
    """Test ConfigurationError for an undocumented parameter."""
    with pytest.raises(ConfigurationError, match="unknown parameter"):
        resolve_settings(ExperimentSpec(name="kmt-demo", overrides={"colour": "red"}))


def test_invalid_override_value():
    """Test ConfigurationError for a value that fails validation."""
    with pytest.raises(ConfigurationError, match="invalid settings"):
        resolve_settings(ExperimentSpec(name="metabolism", overrides={"volume": -5}))


def test_unknown_experiment_name():
    """Test that an experiment request only accepts known names."""
    with pytest.raises(ValueError):
        ExperimentSpec(name="lorenz")


def test_custom_defaults_file(out_dir):
    """Test that a defaults file replaces the bundled one."""
    path = out_dir / "defaults.yml"
    path.write_text("experiments:\n  kmt-demo:\n    delta: 4.0\n")
    settings = resolve_settings(ExperimentSpec(name="kmt-demo"), defaults_path=path)
    assert settings.delta == 4.0


# ========== Experiment Tests ==========

def test_kmt_demo_emits_tables(out_dir):
    """Test that the emitted U matrix equals the worked example."""
    result = _run("kmt-demo", out_dir)
    names = {path.name for path in result.files}
    assert {"kmt_inputs.csv", "kmt_vtilde.csv", "kmt_u.csv", "kmt_paths.csv", "kmt_schedule.csv"} <= names

    rows = (out_dir / "kmt_u.csv").read_text().splitlines()
    assert rows[0] == "j,k,value"
    top = [line for line in rows[1:] if line.startswith("3,")]
    assert top == ["3,1,2"]
    level_one = [int(line.split(",")[2]) for line in rows[1:] if line.startswith("1,")]
    assert level_one == [-2, -2, 1, 2, 0, 2, -2]

    paths = (out_dir / "kmt_paths.csv").read_text().splitlines()
    assert paths[0] == "k,t,poisson_count,N,W"
    assert len(paths) == 18
    assert (out_dir / "kmt_first_increment.csv").read_text().splitlines()[1] == "0"


def test_kmt_paths_columns(out_dir):
    """Test that t = k * Delta and poisson_count is the step of N."""
    _run("kmt-demo", out_dir, delta=0.5)
    rows = np.loadtxt(out_dir / "kmt_paths.csv", delimiter=",", skiprows=1)
    k, t, count, poisson, wiener = rows.T
    np.testing.assert_array_equal(k, np.arange(17))
    np.testing.assert_allclose(t, 0.5 * k)
    np.testing.assert_allclose(np.diff(poisson), count[1:])
    assert count[0] == 0 and poisson[0] == 0 and wiener[0] == 0


def test_metabolism_experiment(out_dir):
    """Test SSA, ODE and EM outputs that re-parse and validate."""
    result = _run(
        "metabolism", out_dir, m_values=[0, 3], volume=50, horizon=1.0, em_step=0.01, methods=["ssa", "ode", "em"]
    )
    assert (out_dir / "metabolism_timings.csv").exists()
    for m in (0, 3):
        network = load_bundled_model("metabolism", m=m)
        for method in ("ssa", "ode", "em"):
            path = out_dir / f"metabolism_m{m}_{method}.csv"
            assert path in result.files
            trajectory = read_csv(path)
            assert trajectory.final_time == pytest.approx(1.0)
            validate_trajectory(trajectory, network)


def test_metabolism_ode_at_fixed_point_is_flat(out_dir):
    """Test that m = 0 started at (1, 1) gives a flat ODE output."""
    _run("metabolism", out_dir, m_values=[0], methods=["ode"], x0=[1.0, 1.0], horizon=2.0, em_step=0.01)
    trajectory = read_csv(out_dir / "metabolism_m0_ode.csv")
    np.testing.assert_allclose(trajectory.states, 1.0, atol=1e-12)


def test_bistable_basins_experiment(out_dir):
    """Test the basin table layout, timings and sample paths."""
    _run(
        "bistable-basins",
        out_dir,
        volume=20,
        horizon=2.0,
        replications=10,
        x_values=[2.0],
        y_values=[0.45, 0.55],
        em_step=0.01,
        sample_paths=2,
        path_grid=0.1,
    )
    rows = (out_dir / "basins.csv").read_text().splitlines()
    assert rows[0] == "x0,y0,method,fraction_basin0,replications,V,delta,seed"
    assert len(rows) == 5
    for row in rows[1:]:
        fraction = float(row.split(",")[3])
        assert 0.0 <= fraction <= 1.0

    timings = (out_dir / "bistable_timings.csv").read_text().splitlines()
    assert timings[0] == "method,wall_clock_s,relative_to_ssa"
    assert {line.split(",")[0] for line in timings[1:]} == {"ssa", "em"}

    network = load_bundled_model("bistable")
    for method in ("ssa", "em"):
        for i in range(2):
            trajectory = read_csv(out_dir / "paths" / f"{method}_path_{i:03d}.csv")
            assert len(trajectory) == 21
            assert trajectory.meta.extra["sampled"] == "0.1"
            validate_trajectory(trajectory, network)


def test_bistable_stable_equilibria():
    """Test that the classifier targets (0, 0) and (6, 9/2)."""
    np.testing.assert_allclose(stable_equilibria(load_bundled_model("bistable")), [(0.0, 0.0), (6.0, 4.5)])


def test_convergence_experiment(out_dir):
    """Test study CSVs and the JSON summary."""
    _run(
        "convergence",
        out_dir,
        seeds=3,
        fluid_volumes=[20, 80],
        fluid_horizon=0.5,
        ode_step=0.01,
        coupling_volumes=[20, 40],
        coupling_horizon=0.2,
        coupling_step=0.01,
    )
    assert (out_dir / "fluid_limit.csv").read_text().startswith("V,median_sup_distance,seeds\n20,")
    assert (out_dir / "coupling.csv").exists()
    summary = json.loads((out_dir / "convergence_summary.json").read_text())
    assert summary["fluid_limit"]["volumes"] == [20.0, 80.0]
    assert isinstance(summary["fluid_limit"]["log_log_slope"], float)
    assert len(summary["coupling"]["median_sup_distance"]) == 2


def test_coupled_demo_experiment(out_dir):
    """Test paired CSVs for both networks."""
    small = {"volume": 40, "horizon": 0.2, "em_step": 0.01, "kmt_step": 0.25}
    _run(
        "coupled-demo",
        out_dir,
        metabolism={**small, "x0": [1.1, 1.1], "upper_bounds": [2.0, 2.0]},
        bistable={**small, "x0": [2.0, 0.5], "upper_bounds": [10.0, 10.0]},
    )
    for name in ("metabolism", "bistable"):
        ctmc, diffusion = read_coupled_csv(out_dir / f"coupled_{name}.csv")
        np.testing.assert_array_equal(ctmc.times, diffusion.times)
        assert ctmc.meta.volume == 40


def test_experiment_outputs_are_deterministic():
    """Test byte-identical CSVs for equal seeds (timing files excluded)."""
    overrides = {"m_values": [0], "volume": 30, "horizon": 0.5, "em_step": 0.01}
    with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
        _run("metabolism", Path(first), **overrides)
        _run("metabolism", Path(second), **overrides)
        for method in ("ssa", "ode", "em"):
            name = f"metabolism_m0_{method}.csv"
            assert (Path(first) / name).read_bytes() == (Path(second) / name).read_bytes()


# ========== Timing Report Tests ==========

def test_report_timings_single_method(out_dir):
    """Test that a single method gives a single row."""
    path = report_timings({"ssa": 2.0}, out_dir / "t.csv")
    assert path.read_text().splitlines() == ["method,wall_clock_s,relative_to_ssa", "ssa,2.000000,1"]


def test_timing_ratio():
    """Test the EM/SSA ratio and its absence without a reference."""
    assert timing_ratio({"ssa": 4.0, "em": 1.0}) == 0.25
    assert timing_ratio({"em": 1.0}) is None
