"""Scenario files: a serializable description of one full experiment.

A scenario YAML file plus its seed determines every output bit-exactly.
Two scenario kinds exist: ``grid2d`` (propagate a 2D wavefunction, derive
fields, integrate ensembles, compute observables) and ``mixed_qc`` (light
quantum coordinate coupled to a heavy classical one).

Schema (grid2d)::

    name: mueller-brown-p0-10
    seed: 20240801
    kind: grid2d                # optional, default
    mass: 1836.0
    grid: {nx: 256, ny: 256, x_min: -2.5, x_max: 1.5, y_min: -1.0, y_max: 2.5}
    potential: {kind: mueller_brown, scale: 5.44e-4}
    initial_state:
      kind: gaussian2d          # or quasi_plane
      center: [0.6235, 0.0280]
      widths: [0.1118, 0.1118]
      p0: 10.0                  # gaussian2d shorthand for momenta [-p0, p0]
      # momenta: [px, py]       # explicit alternative
      # energy, n_copies, spacing   (quasi_plane)
    propagation:
      dt: 0.5
      n_steps: 1400
      save_every: 20
      absorber: {kind: "off"}   # or {kind: cosine, width: w, strength: s}
    sampling:
      - {kind: bohmian_rho0, n: 10000, seed: 1}
      - {kind: classical_rho0, n: 10000, seed: 2, dt: 0.25}
    observables:
      - {kind: fractions, region: {kind: half_plane_above_line, a: 0.8024, b: 1.2734}}
      - {kind: energy}
      - {kind: arrow_map, times: [0, 100, 300], decimate: 8}
      - {kind: angular, x_threshold: 5.0, origin: [0.0, 0.0]}
      - {kind: reduced, traced_axis: 1, n: 0}
      - {kind: trajectory_oracle}

Schema (mixed_qc)::

    name: mixed-qc-harmonic
    seed: 7
    kind: mixed_qc
    x_grid: {n: 256, x_min: -8.0, x_max: 8.0}
    masses: {m_x: 1.0, m_y: 1.0e4}
    potential: {kind: bilinear_harmonic, wx: 1.0, wy: 0.01, lam: 0.05}
    initial: {x_center: 0.5, y: 1.0, p_y: 0.0}
    propagation: {dt: 2.0e-3, n_steps: 3150, record_every: 50}
    mode: expectation           # or trajectory
"""

from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .grid import Grid1D, Grid2D
from .potentials import (
    PotentialSurface,
    mueller_brown,
    mueller_brown_stationary_points,
    slit_half_separation,
)
from .propagate import AbsorberSpec, InitialState, PropagationParams
from .trajectories import SamplingSpec


class ScenarioError(ValueError):
    """Validation failure; the message names the offending field."""


@dataclass
class Scenario:
    """Parsed scenario plus the raw mapping it came from."""

    raw: dict

    @property
    def name(self) -> str:
        return self.raw.get("name", "unnamed")

    @property
    def kind(self) -> str:
        return self.raw.get("kind", "grid2d")

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def mass(self) -> float:
        return float(self.raw.get("mass", 1.0))

    def sha256(self) -> str:
        canon = yaml.safe_dump(self.raw, sort_keys=True).encode()
        return hashlib.sha256(canon).hexdigest()

    # -- section builders --------------------------------------------------

    def grid(self) -> Grid2D:
        g = self.raw["grid"]
        try:
            return Grid2D(int(g["nx"]), int(g["ny"]), float(g["x_min"]),
                          float(g["x_max"]), float(g["y_min"]), float(g["y_max"]))
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"grid: {exc}") from exc

    def potential(self) -> PotentialSurface:
        p = dict(self.raw["potential"])
        kind = p.pop("kind", None)
        try:
            return PotentialSurface(kind, p)
        except ValueError as exc:
            raise ScenarioError(f"potential.kind: {exc}") from exc

    def initial_state(self) -> InitialState:
        s = self.raw["initial_state"]
        kind = s.get("kind")
        if kind not in ("gaussian2d", "quasi_plane"):
            raise ScenarioError(f"initial_state.kind: unknown kind {kind!r}")
        center = tuple(float(v) for v in s.get("center", (0.0, 0.0)))
        widths = tuple(float(v) for v in s.get("widths", (1.0, 1.0)))
        if kind == "gaussian2d":
            if "p0" in s and "momenta" in s:
                raise ScenarioError("initial_state: give either p0 or momenta, not both")
            if "p0" in s:
                p0 = float(s["p0"])
                momenta = (-p0, p0)
            else:
                momenta = tuple(float(v) for v in s.get("momenta", (0.0, 0.0)))
            return InitialState(kind, center, widths, momenta)
        return InitialState(kind, center, widths,
                            energy=float(s["energy"]),
                            n_copies=int(s.get("n_copies", 1)),
                            spacing=float(s.get("spacing", 0.0)))

    def propagation(self) -> PropagationParams:
        p = self.raw["propagation"]
        absorber = None
        a = p.get("absorber", {"kind": "off"})
        if a and a.get("kind", "off") not in ("off", "cosine"):
            raise ScenarioError(f"propagation.absorber.kind: unknown kind {a.get('kind')!r}")
        if a and a.get("kind") == "cosine":
            absorber = AbsorberSpec(width=float(a["width"]),
                                    strength=float(a.get("strength", 1.0)))
        try:
            return PropagationParams(dt=float(p["dt"]), n_steps=int(p["n_steps"]),
                                     save_every=int(p.get("save_every", 1)),
                                     absorber=absorber)
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"propagation: {exc}") from exc

    def sampling(self) -> list[dict]:
        """Sampling specs as dicts: SamplingSpec fields plus classical extras."""
        out = []
        for i, s in enumerate(self.raw.get("sampling", [])):
            kind = s.get("kind")
            n = int(s.get("n", 0))
            seed = int(s.get("seed", self.seed * 1000 + i))
            try:
                spec = SamplingSpec(kind, n, seed)
            except ValueError as exc:
                raise ScenarioError(f"sampling[{i}]: {exc}") from exc
            out.append({"spec": spec, "dt": float(s.get("dt", 0.0)),
                        "csv_max_trajectories": int(s.get("csv_max_trajectories", 2000))})
        return out

    def observables(self) -> list[dict]:
        allowed = {"fractions", "angular", "arrow_map", "energy", "reduced",
                   "trajectory_oracle", "mixed_qc"}
        out = []
        for i, o in enumerate(self.raw.get("observables", [])):
            kind = o.get("kind")
            if kind not in allowed:
                raise ScenarioError(f"observables[{i}].kind: unknown kind {kind!r}")
            out.append(dict(o))
        return out


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ScenarioError("scenario file must contain a mapping")
    return Scenario(raw)


def dump_scenario(scenario: Scenario, path):
    Path(path).write_text(yaml.safe_dump(scenario.raw, sort_keys=False))


def set_by_path(raw: dict, dotted: str, value):
    """Assign a (possibly nested) scalar field, e.g. 'initial_state.p0'."""
    keys = dotted.split(".")
    node = raw
    for k in keys[:-1]:
        if isinstance(node, list):
            node = node[int(k)]
        else:
            node = node.setdefault(k, {})
    leaf = keys[-1]
    if isinstance(node, list):
        node[int(leaf)] = value
    else:
        node[leaf] = value


def validate(scenario: Scenario) -> list[str]:
    """All validation problems, each naming the offending field."""
    problems: list[str] = []
    if scenario.kind == "mixed_qc":
        return _validate_mixed(scenario)
    if scenario.kind != "grid2d":
        return [f"kind: unknown scenario kind {scenario.kind!r}"]

    for section in ("grid", "potential", "initial_state", "propagation"):
        if section not in scenario.raw:
            problems.append(f"{section}: missing section")
    if problems:
        return problems

    grid = surface = state = params = None
    for build, label in ((scenario.grid, "grid"), (scenario.potential, "potential"),
                         (scenario.initial_state, "initial_state"),
                         (scenario.propagation, "propagation")):
        try:
            val = build()
        except ScenarioError as exc:
            problems.append(str(exc))
            continue
        if label == "grid":
            grid = val
        elif label == "potential":
            surface = val
        elif label == "initial_state":
            state = val
        else:
            params = val

    try:
        scenario.sampling()
    except ScenarioError as exc:
        problems.append(str(exc))
    try:
        obs = scenario.observables()
    except ScenarioError as exc:
        problems.append(str(exc))
        obs = []

    if grid is not None and state is not None:
        x0, y0 = state.center
        if not (grid.x_min < x0 < grid.x_max and grid.y_min < y0 < grid.y_max):
            problems.append("initial_state.center: outside the grid")
        else:
            try:
                state.build(grid, scenario.mass)
            except ValueError as exc:
                problems.append(f"initial_state: {exc}")

    if (grid is not None and surface is not None and params is not None
            and params.absorber is not None and surface.kind == "double_slit"):
        w = params.absorber.width
        alpha = surface.params.get("alpha", 25.0)
        ys = slit_half_separation(surface)
        if (grid.x_min + w > -3 * alpha or grid.x_max - w < 3 * alpha
                or grid.y_min + w > -2 * ys or grid.y_max - w < 2 * ys):
            problems.append("propagation.absorber.width: band overlaps the slit region")

    if params is not None:
        horizon = params.dt * params.n_steps
        for i, o in enumerate(obs):
            if o["kind"] == "arrow_map":
                for t in o.get("times", []):
                    if not (0.0 <= float(t) <= horizon + 1e-12):
                        problems.append(f"observables[{i}].times: {t} beyond the horizon {horizon}")
            if o["kind"] == "trajectory_oracle":
                if surface is not None and surface.kind != "free":
                    problems.append(f"observables[{i}]: trajectory_oracle requires a free potential")
                if state is not None and (state.kind != "gaussian2d" or any(state.momenta)):
                    problems.append(f"observables[{i}]: trajectory_oracle requires a "
                                    "zero-momentum gaussian2d state")
    return problems


def _validate_mixed(scenario: Scenario) -> list[str]:
    problems = []
    raw = scenario.raw
    for section in ("x_grid", "masses", "potential", "initial", "propagation"):
        if section not in raw:
            problems.append(f"{section}: missing section")
    if problems:
        return problems
    g = raw["x_grid"]
    try:
        Grid1D(int(g["n"]), float(g["x_min"]), float(g["x_max"]))
    except (KeyError, ValueError) as exc:
        problems.append(f"x_grid: {exc}")
    masses = raw["masses"]
    if float(masses.get("m_y", 0)) < 10.0 * float(masses.get("m_x", 1.0)):
        problems.append("masses.m_y: mass ratio m_y/m_x below the validity limit 10")
    if raw["potential"].get("kind") != "bilinear_harmonic":
        problems.append(f"potential.kind: unknown kind {raw['potential'].get('kind')!r}")
    p = raw["propagation"]
    if float(p.get("dt", 0)) <= 0 or int(p.get("n_steps", 0)) < 1:
        problems.append("propagation: dt must be > 0 and n_steps >= 1")
    if raw.get("mode", "expectation") not in ("expectation", "trajectory"):
        problems.append(f"mode: unknown backreaction mode {raw.get('mode')!r}")
    return problems


# -- presets -------------------------------------------------------------------

SIGMA0 = float(np.sqrt(0.0125))


def preset_mueller_brown(p0: float = 10.0, n: int = 10_000, seed: int = 20240801) -> Scenario:
    """Proton-transfer packet on the Mueller-Brown surface.

    The surface is divided by the particle mass (1836), which places the
    switching of quantum vs classical product formation at p0 ~ 8, and the
    packet starts at the reactants minimum with momenta (-p0, p0).
    """
    m3 = mueller_brown_stationary_points()["M3"]
    return Scenario({
        "name": f"mueller-brown-p0-{p0:g}",
        "kind": "grid2d",
        "seed": seed,
        "mass": 1836.0,
        "grid": {"nx": 256, "ny": 256, "x_min": -4.0, "x_max": 2.0,
                 "y_min": -1.5, "y_max": 3.5},
        "potential": {"kind": "mueller_brown", "scale": 1.0 / 1836.0},
        "initial_state": {"kind": "gaussian2d",
                          "center": [round(float(m3[0]), 6), round(float(m3[1]), 6)],
                          "widths": [SIGMA0, SIGMA0], "p0": float(p0)},
        "propagation": {"dt": 0.5, "n_steps": 1400, "save_every": 20,
                        "absorber": {"kind": "off"}},
        "sampling": [
            {"kind": "bohmian_rho0", "n": n, "seed": 1},
            {"kind": "classical_rho0", "n": n, "seed": 2, "dt": 0.25},
            {"kind": "classical_wigner", "n": n, "seed": 3, "dt": 0.25},
        ],
        "observables": [
            {"kind": "fractions",
             "region": {"kind": "half_plane_above_line", "a": 0.8024, "b": 1.2734}},
            {"kind": "energy"},
            {"kind": "arrow_map", "times": [0, 100, 200, 300, 500, 700], "decimate": 8},
        ],
    })


def preset_double_slit(n: int = 4000, seed: int = 20240802) -> Scenario:
    """Two-slit scattering of a quasi-plane packet, desk-scale variant.

    Keeps the shape of the quartic-barrier slit model and its controlling
    ratios (barrier height 16x the incidence energy, wavelength/slit
    separation 1/3, one open transverse channel) at a grid-resolvable
    wavelength: energy 50 instead of 500, barrier 800, omega 60, alpha 2.
    The original parameters are restored by overriding the potential and
    grid sections (and a much larger grid).
    """
    return Scenario({
        "name": "double-slit-500",
        "kind": "grid2d",
        "seed": seed,
        "mass": 1.0,
        "grid": {"nx": 512, "ny": 1024, "x_min": -16.384, "x_max": 16.384,
                 "y_min": -12.8, "y_max": 12.8},
        "potential": {"kind": "double_slit", "alpha": 2.0, "omega": 60.0,
                      "v0": 800.0, "mass": 1.0},
        "initial_state": {"kind": "quasi_plane", "center": [-8.0, 0.0],
                          "widths": [1.2, 0.45], "energy": 50.0,
                          "n_copies": 17, "spacing": 0.315},
        "propagation": {"dt": 1.0e-3, "n_steps": 2000, "save_every": 40,
                        "absorber": {"kind": "cosine", "width": 2.5, "strength": 4.0}},
        "sampling": [{"kind": "bohmian_rho0", "n": n, "seed": 1}],
        "observables": [
            {"kind": "angular", "x_threshold": 5.0, "origin": [0.0, 0.0]},
            {"kind": "energy"},
            {"kind": "arrow_map", "times": [0.0, 1.0, 2.0], "decimate": 8},
        ],
    })


def preset_free_gaussian_oracle(n: int = 1000, seed: int = 20240803) -> Scenario:
    """Freely spreading packet checked against its closed-form solution."""
    return Scenario({
        "name": "free-gaussian-oracle",
        "kind": "grid2d",
        "seed": seed,
        "mass": 1.0,
        "grid": {"nx": 256, "ny": 256, "x_min": -16.0, "x_max": 16.0,
                 "y_min": -16.0, "y_max": 16.0},
        "potential": {"kind": "free"},
        "initial_state": {"kind": "gaussian2d", "center": [0.0, 0.0],
                          "widths": [0.5, 0.5], "momenta": [0.0, 0.0]},
        "propagation": {"dt": 8.66e-4, "n_steps": 1000, "save_every": 5,
                        "absorber": {"kind": "off"}},
        "sampling": [{"kind": "bohmian_rho0", "n": n, "seed": 1}],
        "observables": [{"kind": "trajectory_oracle"}, {"kind": "energy"}],
    })


def preset_mixed_qc_harmonic(seed: int = 20240804) -> Scenario:
    """Light oscillator bilinearly coupled to a heavy one (ratio 1e4)."""
    return Scenario({
        "name": "mixed-qc-harmonic",
        "kind": "mixed_qc",
        "seed": seed,
        "x_grid": {"n": 256, "x_min": -8.0, "x_max": 8.0},
        "masses": {"m_x": 1.0, "m_y": 1.0e4},
        "potential": {"kind": "bilinear_harmonic", "wx": 1.0, "wy": 0.01, "lam": 0.05},
        "initial": {"x_center": 0.5, "y": 1.0, "p_y": 0.0},
        "propagation": {"dt": 2.0e-3, "n_steps": 3142, "record_every": 50},
        "mode": "expectation",
    })


PRESETS = {
    "mueller-brown": preset_mueller_brown,
    "double-slit-500": preset_double_slit,
    "free-gaussian-oracle": preset_free_gaussian_oracle,
    "mixed-qc-harmonic": preset_mixed_qc_harmonic,
}
