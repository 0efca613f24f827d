import json

import numpy as np
import pytest
import yaml

from qhydro.cli import main
from qhydro.io import read_csv
from qhydro.runner import run, sweep
from qhydro.scenario import (
    PRESETS,
    Scenario,
    ScenarioError,
    load_scenario,
    preset_double_slit,
    preset_free_gaussian_oracle,
    preset_mixed_qc_harmonic,
    preset_mueller_brown,
    set_by_path,
    validate,
)


def tiny_free_scenario(n_steps=100, n=50):
    return Scenario({
        "name": "tiny-free",
        "seed": 123,
        "mass": 1.0,
        "grid": {"nx": 64, "ny": 64, "x_min": -16.0, "x_max": 16.0,
                 "y_min": -16.0, "y_max": 16.0},
        "potential": {"kind": "free"},
        "initial_state": {"kind": "gaussian2d", "center": [0.0, 0.0],
                          "widths": [1.0, 1.0], "momenta": [0.0, 0.0]},
        "propagation": {"dt": 5.0e-3, "n_steps": n_steps, "save_every": 5},
        "sampling": [{"kind": "bohmian_rho0", "n": n, "seed": 1}],
        "observables": [{"kind": "trajectory_oracle"}, {"kind": "energy"}],
    })


# -- validation ----------------------------------------------------------------

def test_validate_passes_presets():
    for name, factory in PRESETS.items():
        assert validate(factory()) == [], name


def test_validate_missing_section():
    problems = validate(Scenario({"name": "x", "grid": {}}))
    assert any(p.startswith("potential") for p in problems)
    assert any(p.startswith("initial_state") for p in problems)


def test_validate_names_bad_grid():
    sc = tiny_free_scenario()
    sc.raw["grid"]["nx"] = 100
    problems = validate(sc)
    assert any(p.startswith("grid") and "power of two" in p for p in problems)


def test_validate_packet_outside_grid():
    sc = tiny_free_scenario()
    sc.raw["initial_state"]["center"] = [40.0, 0.0]
    problems = validate(sc)
    assert any("initial_state.center" in p for p in problems)


def test_validate_packet_too_wide():
    sc = tiny_free_scenario()
    sc.raw["initial_state"]["widths"] = [10.0, 10.0]
    problems = validate(sc)
    assert any("too wide" in p for p in problems)


def test_validate_nonpositive_ensemble():
    sc = tiny_free_scenario()
    sc.raw["sampling"][0]["n"] = 0
    problems = validate(sc)
    assert any(p.startswith("sampling[0]") for p in problems)


def test_validate_absorber_overlapping_slits():
    sc = preset_double_slit()
    sc.raw["propagation"]["absorber"]["width"] = 12.0
    problems = validate(sc)
    assert any("absorber" in p and "slit" in p for p in problems)


def test_validate_unknown_observable():
    sc = tiny_free_scenario()
    sc.raw["observables"].append({"kind": "telepathy"})
    problems = validate(sc)
    assert any("observables[2].kind" in p for p in problems)


def test_validate_oracle_needs_free_zero_momentum():
    sc = tiny_free_scenario()
    sc.raw["potential"] = {"kind": "harmonic2d", "omega": 1.0}
    problems = validate(sc)
    assert any("trajectory_oracle requires a free potential" in p for p in problems)
    sc2 = tiny_free_scenario()
    sc2.raw["initial_state"]["momenta"] = [1.0, 0.0]
    problems2 = validate(sc2)
    assert any("zero-momentum" in p for p in problems2)


def test_validate_p0_momenta_conflict():
    sc = tiny_free_scenario()
    sc.raw["initial_state"]["p0"] = 3.0
    problems = validate(sc)
    assert any("either p0 or momenta" in p for p in problems)


def test_validate_arrow_times_beyond_horizon():
    sc = tiny_free_scenario()
    sc.raw["observables"].append({"kind": "arrow_map", "times": [99.0]})
    problems = validate(sc)
    assert any("beyond the horizon" in p for p in problems)


def test_set_by_path_nested():
    raw = {"a": {"b": [{"c": 1}]}}
    set_by_path(raw, "a.b.0.c", 7)
    assert raw["a"]["b"][0]["c"] == 7


# -- runner --------------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    manifest = run(tiny_free_scenario(), out_dir=out)
    return out, manifest


def test_run_produces_output_tree(tiny_run):
    out, manifest = tiny_run
    assert manifest["complete"] is True
    assert (out / "scenario.yaml").exists()
    assert (out / "potential.csv").exists()
    assert (out / "ensembles" / "bohmian_rho0.csv").exists()
    assert (out / "observables" / "trajectory_oracle.csv").exists()
    assert (out / "observables" / "energy.csv").exists()
    assert len(list((out / "snapshots").glob("field_*.bin"))) == 21
    assert manifest["extras"]["trajectory_oracle_max_abs_error"] < 1e-4


def test_run_is_reproducible(tmp_path, tiny_run):
    _, manifest1 = tiny_run
    manifest2 = run(tiny_free_scenario(), out_dir=tmp_path / "again")
    assert manifest1["outputs_hash"] == manifest2["outputs_hash"]
    assert manifest1["scenario_sha256"] == manifest2["scenario_sha256"]


def test_run_rejects_invalid_scenario(tmp_path):
    sc = tiny_free_scenario()
    sc.raw["sampling"][0]["n"] = -3
    with pytest.raises(ScenarioError, match="sampling"):
        run(sc, out_dir=tmp_path / "bad")


def test_oracle_csv_has_exact_columns(tiny_run):
    out, _ = tiny_run
    data = read_csv(out / "observables" / "trajectory_oracle.csv")
    assert set(data.dtype.names) == {"id", "t", "x", "y", "x_exact", "y_exact"}
    err = max(abs(data["x"] - data["x_exact"]).max(),
              abs(data["y"] - data["y_exact"]).max())
    assert err < 1e-4


def test_mixed_qc_scenario_runs(tmp_path):
    sc = preset_mixed_qc_harmonic()
    sc.raw["propagation"]["n_steps"] = 300
    manifest = run(sc, out_dir=tmp_path / "mixed")
    data = read_csv(tmp_path / "mixed" / "timeseries.csv")
    assert set(data.dtype.names) == {"t", "y", "p_y", "x_mean", "E", "norm"}
    assert manifest["extras"]["energy_drift_rel"] < 1e-4
    assert np.max(np.abs(data["norm"] - 1.0)) < 1e-10


def test_reduced_observable_outputs(tmp_path):
    sc = tiny_free_scenario()
    sc.raw["observables"] = [{"kind": "reduced", "traced_axis": 1, "n": 40}]
    out = tmp_path / "red"
    manifest = run(sc, out_dir=out)
    diag = read_csv(out / "observables" / "reduced_diagonal.csv")
    assert set(diag.dtype.names) == {"t", "x", "rho"}
    assert (out / "reduced_final.bin").exists()
    assert (out / "ensembles" / "reduced.csv").exists()
    kinds = [e["kind"] for e in manifest["ensembles"]]
    assert "reduced" in kinds


# -- sweep ----------------------------------------------------------------------

def test_sweep_dt_convergence_table(tmp_path):
    sc = tiny_free_scenario(n_steps=100)
    results = sweep(sc, "propagation.dt", [1e-2, 5e-3], out_root=tmp_path / "sw")
    assert all("error" not in r for r in results.values())
    table = read_csv(tmp_path / "sw" / "sweep_summary.csv")
    errs = np.sort(np.atleast_1d(table["max_abs_error"]))[::-1]
    assert errs[0] > errs[1]   # halving dt shrinks the oracle error


def test_sweep_empty_values_rejected(tmp_path):
    with pytest.raises(ScenarioError, match="empty"):
        sweep(tiny_free_scenario(), "initial_state.p0", [], out_root=tmp_path)


def test_sweep_records_failures_and_continues(tmp_path):
    sc = tiny_free_scenario(n_steps=20)
    results = sweep(sc, "grid.nx", [64, 100], out_root=tmp_path / "sw2")
    assert "error" not in results[64]
    assert "error" in results[100]
    summary = (tmp_path / "sw2" / "sweep_summary.csv").read_text()
    assert "failed" in summary


# -- CLI ------------------------------------------------------------------------

def test_cli_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    for name in PRESETS:
        assert name in out


def test_cli_presets_emit_and_validate(tmp_path, capsys):
    f = tmp_path / "mb.yaml"
    assert main(["presets", "emit", "mueller-brown", "--p0", "6", "-o", str(f)]) == 0
    raw = yaml.safe_load(f.read_text())
    assert raw["initial_state"]["p0"] == 6.0
    assert main(["validate", str(f)]) == 0


def test_cli_validate_fails_on_broken_file(tmp_path, capsys):
    sc = tiny_free_scenario()
    sc.raw["sampling"][0]["n"] = -1
    f = tmp_path / "bad.yaml"
    f.write_text(yaml.safe_dump(sc.raw))
    assert main(["validate", str(f)]) == 1
    assert "sampling" in capsys.readouterr().err


def test_cli_run_tiny(tmp_path, capsys):
    sc = tiny_free_scenario(n_steps=20, n=10)
    f = tmp_path / "tiny.yaml"
    f.write_text(yaml.safe_dump(sc.raw))
    assert main(["run", str(f), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "manifest.json").exists()


def test_cli_run_invalid_exits_2(tmp_path, capsys):
    sc = tiny_free_scenario()
    sc.raw["grid"]["nx"] = 100
    f = tmp_path / "bad.yaml"
    f.write_text(yaml.safe_dump(sc.raw))
    assert main(["run", str(f), "--out", str(tmp_path / "out")]) == 2
