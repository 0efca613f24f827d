"""Scenario execution: propagate, derive fields, integrate ensembles,
compute observables, and write a reproducible output tree.

Output layout (grid2d)::

    <out>/
      manifest.json             inputs hash, versions, counts, output hashes
      scenario.yaml             the resolved scenario that was run
      snapshots/field_*.bin     wavefunction dumps every save_every steps
      potential.csv             (x, y, V), decimated to ~256 points per axis
      reaction_path.csv         Mueller-Brown surfaces only
      density_t*.csv, arrows_t*.csv      at arrow_map times
      density_final.csv
      ensembles/<kind>.csv      trajectories (subsampled for CSV)
      observables/fractions_<kind>.csv   (t, W, W_bar, P)
      observables/angular_field.csv, angular_<kind>.csv
      observables/energy.csv
      observables/trajectory_oracle.csv  free-Gaussian preset
      observables/reduced_*.csv, reduced_final.bin

The manifest's ``outputs_hash`` is a digest over all output file hashes;
rerunning the same scenario and seed reproduces it bit-exactly.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .fields import density, velocity_arrays
from .grid import Grid1D
from .io import (
    DiskSnapshots,
    write_angular_csv,
    write_arrow_csv,
    write_ensemble_csv,
    write_field_bin,
    write_field_csv,
    write_fractions_csv,
    write_path_csv,
    _savetxt,
)
from .mixedqc import BilinearHarmonic, MixedState, run_mixed
from .observables import RegionSpec, angular_distribution, fraction_series, mean_energy
from .potentials import mueller_brown_reaction_path
from .propagate import kinetic_expectation, propagate
from .reduced import integrate_reduced, partial_trace, reduced_velocity
from .scenario import Scenario, ScenarioError, dump_scenario, load_scenario, set_by_path, validate
from .trajectories import TrajectoryEnsemble, integrate_bohmian, integrate_classical, sample
from .fields import WaveField1D


def output_root() -> Path:
    return Path(os.environ.get("QHYDRO_OUTPUT_ROOT", "runs"))


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _region_from(spec: dict) -> RegionSpec:
    return RegionSpec(spec["kind"], a=float(spec.get("a", 0.0)),
                      b=float(spec.get("b", 0.0)),
                      threshold=float(spec.get("threshold", 0.0)))


def _sigma_of_t(t, sigma0, mass):
    return sigma0 * np.sqrt(1.0 + (t / (2.0 * mass * sigma0**2)) ** 2)


def run(scenario: Scenario | str | Path, out_dir=None) -> dict:
    """Execute a scenario (object or file path); returns the manifest."""
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    problems = validate(scenario)
    if problems:
        raise ScenarioError("; ".join(problems))

    out = Path(out_dir) if out_dir is not None else output_root() / scenario.name
    out.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    manifest = {
        "name": scenario.name,
        "kind": scenario.kind,
        "seed": scenario.seed,
        "scenario_sha256": scenario.sha256(),
        "versions": {"qhydro": __version__, "numpy": np.__version__},
        "ensembles": [],
        "extras": {},
        "complete": False,
    }
    dump_scenario(scenario, out / "scenario.yaml")
    try:
        if scenario.kind == "mixed_qc":
            _run_mixed_scenario(scenario, out, manifest)
        else:
            _run_grid2d(scenario, out, manifest)
        manifest["complete"] = True
    finally:
        manifest["wall_time_s"] = round(time.perf_counter() - t_start, 3)
        outputs = {}
        for p in sorted(out.rglob("*")):
            if p.is_file() and p.name != "manifest.json":
                outputs[str(p.relative_to(out))] = _hash_file(p)
        manifest["outputs"] = outputs
        digest = hashlib.sha256()
        for rel in sorted(outputs):
            digest.update(rel.encode())
            digest.update(outputs[rel].encode())
        manifest["outputs_hash"] = digest.hexdigest()
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def _run_grid2d(scenario: Scenario, out: Path, manifest: dict):
    grid = scenario.grid()
    surface = scenario.potential()
    state = scenario.initial_state()
    params = scenario.propagation()
    psi0 = state.build(grid, scenario.mass)

    snapshots = DiskSnapshots(out / "snapshots")
    result = propagate(psi0, surface, params, snapshots=snapshots)
    manifest["extras"]["absorbed_fraction"] = float(result.absorbed_fraction)

    X, Y = grid.meshgrid()
    dec = max(1, grid.nx // 256, grid.ny // 256)
    write_field_csv(out / "potential.csv", grid, surface.value(X, Y), decimate=dec)
    if surface.kind == "mueller_brown":
        path = mueller_brown_reaction_path(surface)
        write_path_csv(out / "reaction_path.csv", path, surface)
    write_field_csv(out / "density_final.csv", grid, density(result.psi), decimate=dec)

    ens_dir = out / "ensembles"
    obs_dir = out / "observables"
    ens_dir.mkdir(exist_ok=True)
    obs_dir.mkdir(exist_ok=True)

    observables = scenario.observables()
    horizon = params.dt * params.n_steps

    ensembles: list[tuple[str, TrajectoryEnsemble]] = []
    names_seen: dict[str, int] = {}
    for item in scenario.sampling():
        spec = item["spec"]
        ic = sample(spec, psi0, state)
        if spec.kind == "bohmian_rho0":
            ens = integrate_bohmian(ic, snapshots)
        else:
            cl_dt = item["dt"] or params.dt / 2.0
            n_steps = int(round(horizon / cl_dt))
            rec = max(1, int(round(params.dt * params.save_every / cl_dt)))
            ens = integrate_classical(ic, surface, cl_dt, n_steps, scenario.mass,
                                      record_every=rec)
        label = spec.kind
        if label in names_seen:
            names_seen[label] += 1
            label = f"{label}_{names_seen[label]}"
        else:
            names_seen[label] = 0
        ensembles.append((label, ens))
        manifest["ensembles"].append({"kind": spec.kind, "label": label, "n": spec.n,
                                      "seed": spec.seed, "masked": ens.masked_count})
        sub = item["csv_max_trajectories"]
        if ens.n > sub:
            keep = np.linspace(0, ens.n - 1, sub).astype(int)
            slim = TrajectoryEnsemble(ens.kind, ens.times, ens.positions[keep],
                                      None if ens.momenta is None else ens.momenta[keep],
                                      ens.masked[keep], ens.masked_step[keep], ens.mass)
            write_ensemble_csv(ens_dir / f"{label}.csv", slim)
        else:
            write_ensemble_csv(ens_dir / f"{label}.csv", ens)

    for obs in observables:
        kind = obs["kind"]
        if kind == "fractions":
            region = _region_from(obs["region"])
            for label, ens in ensembles:
                series = fraction_series(ens, region, snapshots=snapshots
                                         if ens.kind == "bohmian" else None)
                if series.p is None:
                    p = np.array([
                        _restricted_norm_at(snapshots, i, region)
                        for i in range(len(snapshots))
                    ])
                    series.p = np.interp(ens.times, snapshots.times, p)
                write_fractions_csv(obs_dir / f"fractions_{label}.csv", series)
        elif kind == "angular":
            origin = tuple(obs.get("origin", (0.0, 0.0)))
            thr = float(obs.get("x_threshold", 0.0))
            bw = float(obs.get("bin_width_deg", 1.0))
            theta, inten = angular_distribution(result.psi, origin, thr, bw)
            write_angular_csv(obs_dir / "angular_field.csv", theta, inten)
            for label, ens in ensembles:
                theta, inten = angular_distribution(ens, origin, thr, bw)
                write_angular_csv(obs_dir / f"angular_{label}.csv", theta, inten)
        elif kind == "arrow_map":
            times = snapshots.times
            for t in obs.get("times", []):
                i = int(np.argmin(np.abs(times - float(t))))
                psi_t = snapshots.wavefield(i)
                vx, vy, ok = velocity_arrays(psi_t)
                tag = f"{times[i]:g}"
                write_arrow_csv(out / f"arrows_t{tag}.csv", grid, vx, vy, ok,
                                decimate=int(obs.get("decimate", 8)))
                write_field_csv(out / f"density_t{tag}.csv", grid, density(psi_t),
                                decimate=dec)
        elif kind == "energy":
            rows = {"label": [], "value": []}
            labels = ["quantum_initial", "quantum_final"]
            values = [mean_energy(psi0, surface), mean_energy(result.psi, surface)]
            for label, ens in ensembles:
                if ens.momenta is not None:
                    labels.append(f"{label}_initial_mean")
                    values.append(mean_energy(ens, surface, time_index=0))
            _savetxt_labeled(obs_dir / "energy.csv", labels, values)
        elif kind == "trajectory_oracle":
            _trajectory_oracle(scenario, state, ensembles, obs_dir, manifest)
        elif kind == "reduced":
            _reduced_observable(scenario, snapshots, obs, out, obs_dir, manifest)


def _restricted_norm_at(snapshots, i, region):
    from .observables import restricted_norm
    return restricted_norm(snapshots.wavefield(i), region)


def _savetxt_labeled(path, labels, values):
    lines = ["label,value"]
    lines += [f"{l},{v!r}" for l, v in zip(labels, values)]
    Path(path).write_text("\n".join(lines) + "\n")


def _trajectory_oracle(scenario, state, ensembles, obs_dir, manifest):
    """Bohmian trajectories against the closed-form spreading law."""
    bohm = [e for label, e in ensembles if e.kind == "bohmian"]
    if not bohm:
        raise ScenarioError("trajectory_oracle: no bohmian ensemble sampled")
    ens = bohm[0]
    sx, sy = state.widths
    x0 = ens.positions[:, 0, :]
    t = ens.times[np.newaxis, :]
    cx, cy = state.center
    ex = cx + (x0[:, 0:1] - cx) * _sigma_of_t(t, sx, scenario.mass) / sx
    ey = cy + (x0[:, 1:2] - cy) * _sigma_of_t(t, sy, scenario.mass) / sy
    exact = np.stack([ex, ey], axis=-1)
    err = np.abs(ens.positions[ens.valid] - exact[ens.valid])
    manifest["extras"]["trajectory_oracle_max_abs_error"] = float(err.max())
    n, T = ens.positions.shape[:2]
    cols = {
        "id": np.repeat(np.arange(n), T),
        "t": np.tile(ens.times, n),
        "x": ens.positions[:, :, 0].ravel(),
        "y": ens.positions[:, :, 1].ravel(),
        "x_exact": exact[:, :, 0].ravel(),
        "y_exact": exact[:, :, 1].ravel(),
    }
    _savetxt(obs_dir / "trajectory_oracle.csv", cols)


def _reduced_observable(scenario, snapshots, obs, out, obs_dir, manifest):
    axis = int(obs.get("traced_axis", 1))
    reduced_list = []
    for i in range(len(snapshots)):
        rd = partial_trace(snapshots.wavefield(i), traced_axis=axis)
        reduced_list.append(rd)
    x = reduced_list[0].grid1d.x
    rows_t, rows_x, rows_rho, rows_v = [], [], [], []
    for rd in reduced_list:
        v = reduced_velocity(rd)
        rows_t.append(np.full_like(x, rd.time))
        rows_x.append(x)
        rows_rho.append(rd.diagonal)
        rows_v.append(np.ma.getdata(v))
    _savetxt(obs_dir / "reduced_diagonal.csv",
             {"t": np.concatenate(rows_t), "x": np.concatenate(rows_x),
              "rho": np.concatenate(rows_rho)})
    _savetxt(obs_dir / "reduced_velocity.csv",
             {"t": np.concatenate(rows_t), "x": np.concatenate(rows_x),
              "v": np.concatenate(rows_v)})
    final = reduced_list[-1]
    sq = final.grid1d
    from .grid import Grid2D
    square = Grid2D(sq.n, sq.n, sq.x_min, sq.x_max, sq.x_min, sq.x_max)
    write_field_bin(out / "reduced_final.bin", square, final.rho_matrix,
                    time=final.time, mass=final.mass)

    n = int(obs.get("n", 0))
    if n > 0:
        rng = np.random.default_rng(int(obs.get("seed", scenario.seed + 77)))
        diag0 = reduced_list[0].diagonal
        starts = []
        peak = diag0.max()
        while len(starts) < n:
            cand = rng.uniform(x[0], x[-1], 4 * n)
            u = rng.uniform(0, peak, 4 * n)
            vals = np.interp(cand, x, diag0)
            starts.extend(cand[u < vals][: n - len(starts)])
        ens = integrate_reduced(np.asarray(starts), reduced_list)
        write_ensemble_csv(out / "ensembles" / "reduced.csv", ens)
        manifest["ensembles"].append({"kind": "reduced", "label": "reduced",
                                      "n": n, "seed": int(obs.get("seed", scenario.seed + 77)),
                                      "masked": ens.masked_count})


def _run_mixed_scenario(scenario: Scenario, out: Path, manifest: dict):
    raw = scenario.raw
    g = raw["x_grid"]
    grid = Grid1D(int(g["n"]), float(g["x_min"]), float(g["x_max"]))
    m_x = float(raw["masses"]["m_x"])
    m_y = float(raw["masses"]["m_y"])
    p = raw["potential"]
    pot = BilinearHarmonic(mx=m_x, my=m_y, wx=float(p["wx"]), wy=float(p["wy"]),
                           lam=float(p.get("lam", 0.0)))
    init = raw["initial"]
    x_c = float(init.get("x_center", 0.0))
    vals = np.exp(-m_x * pot.wx * (grid.x - x_c) ** 2 / 2.0).astype(complex)
    psi = WaveField1D(grid, vals, 0.0, m_x).normalize()
    state = MixedState(psi, y=float(init["y"]), p_y=float(init.get("p_y", 0.0)),
                       m_y=m_y, potential=pot,
                       x_cond=float(init.get("x_cond", x_c)))
    prop = raw["propagation"]
    final, series = run_mixed(state, float(prop["dt"]), int(prop["n_steps"]),
                              record_every=int(prop.get("record_every", 1)),
                              mode=raw.get("mode", "expectation"))
    _savetxt(out / "timeseries.csv",
             {"t": series.times, "y": series.y, "p_y": series.p_y,
              "x_mean": series.x_mean, "E": series.energy, "norm": series.norm})
    manifest["extras"]["energy_drift_rel"] = float(
        np.max(np.abs(series.energy - series.energy[0]) / abs(series.energy[0])))


def sweep(scenario: Scenario | str | Path, param: str, values, out_root=None) -> dict:
    """Run the scenario once per parameter value; failures are recorded and
    the sweep continues.  Returns {value: manifest-or-error} plus writes a
    summary CSV with the final no-recrossing fractions per ensemble."""
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    values = list(values)
    if not values:
        raise ScenarioError("sweep: empty value list")
    root = Path(out_root) if out_root is not None else output_root() / f"{scenario.name}-sweep"
    root.mkdir(parents=True, exist_ok=True)

    results = {}
    rows = []
    for v in values:
        raw = copy.deepcopy(scenario.raw)
        set_by_path(raw, param, v)
        sub = Scenario(raw)
        sub_dir = root / f"{param.replace('.', '_')}={v:g}"
        row = {"value": v, "status": "ok"}
        try:
            manifest = run(sub, out_dir=sub_dir)
            results[v] = manifest
            for ens in manifest["ensembles"]:
                frac_file = sub_dir / "observables" / f"fractions_{ens['label']}.csv"
                if frac_file.exists():
                    data = np.genfromtxt(frac_file, delimiter=",", names=True)
                    row[f"w_bar_{ens['label']}"] = float(np.atleast_1d(data["W_bar"])[-1])
            if "trajectory_oracle_max_abs_error" in manifest["extras"]:
                row["max_abs_error"] = manifest["extras"]["trajectory_oracle_max_abs_error"]
        except Exception as exc:   # record and continue
            results[v] = {"error": str(exc)}
            row["status"] = f"failed: {exc}"
        rows.append(row)

    keys = ["value", "status"]
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    lines = [",".join(keys)]
    for r in rows:
        lines.append(",".join(str(r.get(k, "")) for k in keys))
    (root / "sweep_summary.csv").write_text("\n".join(lines) + "\n")
    return results
