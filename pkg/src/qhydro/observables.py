"""Reaction and scattering observables over fields and trajectory ensembles.

Restricted norm (probability inside a region), trajectory fractions W and
W-bar (currently inside / ever entered, no re-counting), ensemble and
quantum mean energies, and angular intensity distributions for
transmitted scattering density.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fields import WaveField, density
from .propagate import kinetic_expectation, potential_expectation
from .potentials import PotentialSurface
from .trajectories import TrajectoryEnsemble


@dataclass
class RegionSpec:
    """Half-plane region: ``half_plane_above_line`` is y > a x + b;
    ``half_plane_x_positive`` is x > threshold."""

    kind: str
    a: float = 0.0
    b: float = 0.0
    threshold: float = 0.0

    def __post_init__(self):
        if self.kind not in ("half_plane_above_line", "half_plane_x_positive"):
            raise ValueError(f"unknown region kind: {self.kind!r}")

    def contains(self, x, y) -> np.ndarray:
        if self.kind == "half_plane_above_line":
            return np.asarray(y) > self.a * np.asarray(x) + self.b
        return np.asarray(x) > self.threshold


def restricted_norm(psi: WaveField, region: RegionSpec) -> float:
    """Probability integrated over the region (cell-center membership)."""
    X, Y = psi.grid.meshgrid()
    inside = region.contains(X, Y)
    return float(np.sum(density(psi)[inside]) * psi.grid.cell_area)


@dataclass
class FractionSeries:
    """W(t), W_bar(t) of an ensemble and, when available, the field P(t)."""

    times: np.ndarray
    w: np.ndarray
    w_bar: np.ndarray
    p: np.ndarray | None = None
    n_valid: int = 0
    n_masked: int = 0


def fraction_series(ensemble: TrajectoryEnsemble, region: RegionSpec,
                    snapshots=None) -> FractionSeries:
    """Fractions of valid trajectories currently in / ever having entered
    the region.  Masked trajectories are excluded with their count
    reported.  With ``snapshots`` given (same saved times), the restricted
    norm P(t) is attached.
    """
    valid = ensemble.valid
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise ValueError("no valid trajectories in ensemble")
    pos = ensemble.positions[valid]
    inside = region.contains(pos[:, :, 0], pos[:, :, 1])  # (n_valid, T)
    w = inside.mean(axis=0)
    ever = np.logical_or.accumulate(inside, axis=1)
    w_bar = ever.mean(axis=0)

    p = None
    if snapshots is not None:
        times = snapshots.times
        if len(times) != len(ensemble.times) or not np.allclose(times, ensemble.times):
            raise ValueError("snapshot times do not match ensemble times")
        p = np.array([restricted_norm(snapshots.wavefield(i), region)
                      for i in range(len(times))])
    return FractionSeries(ensemble.times.copy(), w, w_bar, p,
                          n_valid, ensemble.masked_count)


def mean_energy(obj, surface: PotentialSurface, time_index: int = 0) -> float:
    """Mean energy of a WaveField (<H> by spectral quadrature) or of a
    classical ensemble (average of p^2/2m + V at the given saved time)."""
    if isinstance(obj, WaveField):
        return kinetic_expectation(obj) + potential_expectation(obj, surface)
    ens: TrajectoryEnsemble = obj
    if ens.momenta is None:
        raise ValueError("ensemble carries no momenta; energy undefined for "
                         "Bohmian ensembles (use the WaveField)")
    pos = ens.positions[ens.valid, time_index]
    mom = ens.momenta[ens.valid, time_index]
    kin = np.sum(mom**2, axis=1) / (2.0 * ens.mass)
    pot = surface.value(pos[:, 0], pos[:, 1])
    return float(np.mean(kin + pot))


def angular_distribution(obj, origin=(0.0, 0.0), x_threshold: float = 0.0,
                         bin_width_deg: float = 1.0,
                         time_index: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Transmitted intensity binned in the angle from the +x axis.

    For a WaveField, density beyond ``x_threshold`` is integrated per
    angular bin; for an ensemble, valid trajectory endpoints are counted.
    Bin centers run from -90 to 90 degrees (no bin edge at 0, so a
    symmetric field bins symmetrically); the distribution is normalized
    to unit sum (all-zero with a warning when nothing is transmitted).
    """
    n_bins = int(round(180.0 / bin_width_deg)) + 1
    edges = -90.0 - bin_width_deg / 2.0 + bin_width_deg * np.arange(n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    if isinstance(obj, WaveField):
        X, Y = obj.grid.meshgrid()
        sel = X > x_threshold
        theta = np.degrees(np.arctan2(Y[sel] - origin[1], X[sel] - origin[0]))
        weights = density(obj)[sel] * obj.grid.cell_area
    else:
        ens: TrajectoryEnsemble = obj
        pos = ens.positions[ens.valid, time_index]
        sel = pos[:, 0] > x_threshold
        theta = np.degrees(np.arctan2(pos[sel, 1] - origin[1], pos[sel, 0] - origin[0]))
        weights = np.ones(int(sel.sum()))
    hist, _ = np.histogram(theta, bins=edges, weights=weights)
    total = hist.sum()
    if total <= 0:
        warnings.warn("empty transmitted region: angular distribution is all zero")
        return centers, np.zeros_like(centers)
    return centers, hist / total
