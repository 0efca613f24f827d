"""Split-operator time propagation and initial-state construction.

One step is the Strang composition
exp(-i V dt/2) exp(-i T dt) exp(-i V dt/2) with the kinetic factor applied
in Fourier space, second-order accurate in dt and exactly unitary (to
roundoff) on the periodic grid.  An optional cosine boundary mask absorbs
outgoing flux in scattering runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import HBAR, Grid1D, Grid2D
from .fields import WaveField, WaveField1D, density
from .potentials import PotentialSurface


@dataclass
class AbsorberSpec:
    """Cosine^2 amplitude mask over a boundary band of the given width."""

    width: float
    strength: float = 1.0

    def mask(self, grid: Grid2D) -> np.ndarray:
        def profile(coord, lo, hi):
            xi_lo = np.clip((lo + self.width - coord) / self.width, 0.0, 1.0)
            xi_hi = np.clip((coord - (hi - self.width)) / self.width, 0.0, 1.0)
            xi = np.maximum(xi_lo, xi_hi)
            return np.cos(0.5 * np.pi * xi) ** (2.0 * self.strength)

        fx = profile(grid.x, grid.x_min, grid.x_max)
        fy = profile(grid.y, grid.y_min, grid.y_max)
        return fx[:, None] * fy[None, :]


@dataclass
class PropagationParams:
    dt: float
    n_steps: int
    save_every: int = 1
    absorber: AbsorberSpec | None = None
    check_nan_every: int = 50

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.save_every < 1:
            raise ValueError("save_every must be >= 1")


@dataclass
class InitialState:
    """Declarative initial-state description (see make_gaussian/make_quasi_plane)."""

    kind: str                      # gaussian2d | quasi_plane
    center: tuple = (0.0, 0.0)
    widths: tuple = (1.0, 1.0)
    momenta: tuple = (0.0, 0.0)    # gaussian2d only
    energy: float | None = None    # quasi_plane target <E>
    n_copies: int = 1
    spacing: float = 0.0

    def build(self, grid: Grid2D, mass: float) -> WaveField:
        if self.kind == "gaussian2d":
            return make_gaussian(grid, self.center, self.widths, self.momenta, mass)
        if self.kind == "quasi_plane":
            return make_quasi_plane(grid, self.center[0], self.energy, self.n_copies,
                                    self.spacing, mass, widths=self.widths,
                                    y_center=self.center[1])
        raise ValueError(f"unknown initial state kind: {self.kind!r}")


def _check_contained(rho: np.ndarray, rel_tol: float = 1e-10):
    peak = rho.max()
    edge = max(rho[0, :].max(), rho[-1, :].max(), rho[:, 0].max(), rho[:, -1].max())
    if edge > rel_tol * peak:
        raise ValueError(
            f"packet too wide for grid: boundary density {edge/peak:.3e} of peak "
            f"exceeds {rel_tol:.0e}"
        )


def make_gaussian(grid: Grid2D, center, widths, momenta, mass: float) -> WaveField:
    """Normalized Gaussian packet with plane-wave phase factors.

    psi ~ exp(-(x-x0)^2/4 sx^2 - (y-y0)^2/4 sy^2 + i px (x-x0) + i py (y-y0))
    """
    x0, y0 = center
    sx, sy = widths
    px, py = momenta
    if sx <= 0 or sy <= 0:
        raise ValueError("widths must be positive")
    X, Y = grid.meshgrid()
    envelope = np.exp(-((X - x0) ** 2) / (4 * sx * sx) - ((Y - y0) ** 2) / (4 * sy * sy))
    phase = np.exp(1j * (px * (X - x0) + py * (Y - y0)) / HBAR)
    psi = WaveField(grid, envelope * phase / np.sqrt(2 * np.pi * sx * sy), 0.0, mass)
    _check_contained(density(psi))
    return psi.normalize()


def kinetic_expectation(psi: WaveField) -> float:
    """<T> by spectral quadrature (Parseval)."""
    grid = psi.grid
    f = np.fft.fft2(psi.values)
    k2 = grid.kx[:, None] ** 2 + grid.ky[None, :] ** 2
    w = np.sum(k2 * np.abs(f) ** 2) * grid.cell_area / (grid.nx * grid.ny)
    return float(HBAR**2 * w / (2.0 * psi.mass))


def potential_expectation(psi: WaveField, surface: PotentialSurface) -> float:
    X, Y = psi.grid.meshgrid()
    return float(np.sum(surface.value(X, Y) * density(psi)) * psi.grid.cell_area)


def make_quasi_plane(grid: Grid2D, x0: float, energy: float, n_copies: int,
                     spacing: float, mass: float, widths=(1.0, 1.0),
                     y_center: float = 0.0) -> WaveField:
    """Quasi-plane state: identical Gaussians superposed along y with a
    common +x momentum chosen so that the grid-evaluated <E> (kinetic;
    launch the packet where V ~ 0) hits the target.
    """
    if n_copies < 1:
        raise ValueError("n_copies must be >= 1")
    sx, sy = widths
    offsets = (np.arange(n_copies) - 0.5 * (n_copies - 1)) * spacing + y_center
    if offsets.size and (offsets.min() - 5 * sy < grid.y_min or offsets.max() + 5 * sy > grid.y_max):
        raise ValueError("quasi-plane span exceeds grid in y")
    X, Y = grid.meshgrid()
    base = np.zeros_like(X)
    for yj in offsets:
        base += np.exp(-((X - x0) ** 2) / (4 * sx * sx) - ((Y - yj) ** 2) / (4 * sy * sy))
    psi = WaveField(grid, base.astype(np.complex128), 0.0, mass).normalize()
    e_internal = kinetic_expectation(psi)
    if energy is not None:
        if energy <= e_internal:
            raise ValueError(
                f"target energy {energy} below the internal (spreading) energy "
                f"{e_internal:.6g} of the envelope"
            )
        px = np.sqrt(2.0 * mass * (energy - e_internal))
        psi.values *= np.exp(1j * px * (X - x0) / HBAR)
    _check_contained(density(psi))
    return psi


class Propagator:
    """Cached-phase split-operator stepper for a fixed (grid, V, dt, mass)."""

    def __init__(self, grid: Grid2D, surface: PotentialSurface, mass: float,
                 dt: float, absorber: AbsorberSpec | None = None):
        self.grid, self.mass, self.dt = grid, mass, dt
        X, Y = grid.meshgrid()
        v = surface.value(X, Y)
        self._vhalf = np.exp(-0.5j * dt * v / HBAR)
        k2 = grid.kx[:, None] ** 2 + grid.ky[None, :] ** 2
        self._kin = np.exp(-0.5j * HBAR * dt * k2 / mass)
        self._absorb = absorber.mask(grid) if absorber is not None else None

    def step_values(self, values: np.ndarray) -> np.ndarray:
        out = self._vhalf * values
        out = np.fft.ifft2(self._kin * np.fft.fft2(out))
        out *= self._vhalf
        if self._absorb is not None:
            out *= self._absorb
        return out


def step(psi: WaveField, surface: PotentialSurface, params: PropagationParams) -> WaveField:
    """One Strang split-operator step; returns a new WaveField at t + dt."""
    prop = Propagator(psi.grid, surface, psi.mass, params.dt, params.absorber)
    values = prop.step_values(psi.values)
    if np.isnan(values.view(float)).any():
        raise FloatingPointError("NaN detected after propagation step")
    return WaveField(psi.grid, values, psi.time + params.dt, psi.mass)


@dataclass
class PropagationResult:
    psi: WaveField
    snapshots: object            # snapshot store with .append()/.times
    norm_history: np.ndarray     # |psi|^2 at each save time
    absorbed_fraction: float


def propagate(psi: WaveField, surface: PotentialSurface, params: PropagationParams,
              snapshots=None) -> PropagationResult:
    """Propagate n_steps, appending a snapshot every save_every steps
    (including t=0 and the final step) to ``snapshots`` (defaults to an
    in-memory store; see :mod:`qhydro.io` for the disk-backed one).
    """
    from .io import MemorySnapshots

    if snapshots is None:
        snapshots = MemorySnapshots()
    prop = Propagator(psi.grid, surface, psi.mass, params.dt, params.absorber)
    cur = psi.copy()
    snapshots.append(cur)
    norms = [cur.norm_squared()]
    for n in range(1, params.n_steps + 1):
        cur = WaveField(cur.grid, prop.step_values(cur.values),
                        psi.time + n * params.dt, cur.mass)
        if params.check_nan_every and (n % params.check_nan_every == 0 or n == params.n_steps):
            if np.isnan(cur.values.view(float)).any():
                raise FloatingPointError(
                    f"NaN detected at step {n} (t={cur.time:.6g}); "
                    "reduce dt or check the potential"
                )
        if n % params.save_every == 0 or n == params.n_steps:
            snapshots.append(cur)
            norms.append(cur.norm_squared())
    return PropagationResult(cur, snapshots, np.asarray(norms), 1.0 - norms[-1])


class Propagator1D:
    """1D split-operator stepper with a per-step potential (mixed dynamics)."""

    def __init__(self, grid: Grid1D, mass: float, dt: float):
        self.grid, self.mass, self.dt = grid, mass, dt
        self._kin = np.exp(-0.5j * HBAR * dt * grid.k**2 / mass)

    def step_values(self, values: np.ndarray, v: np.ndarray) -> np.ndarray:
        vhalf = np.exp(-0.5j * self.dt * v / HBAR)
        out = vhalf * values
        out = np.fft.ifft(self._kin * np.fft.fft(out))
        return vhalf * out


def kinetic_expectation_1d(psi: WaveField1D) -> float:
    f = np.fft.fft(psi.values)
    w = np.sum(psi.grid.k**2 * np.abs(f) ** 2) * psi.grid.dx / psi.grid.n
    return float(HBAR**2 * w / (2.0 * psi.mass))
