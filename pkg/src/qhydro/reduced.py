"""Reduced density matrices of a two-coordinate wavefunction and the
trajectories of the velocity field they define.

Tracing one coordinate of psi(x, y) gives rho(x, x'); its diagonal is the
measured intensity and the field
v(x) = (hbar/m) Im[d/dx rho(x, x')] / Re[rho(x, x')] at x' = x transports
it.  For a product state this reduces to the ordinary single-particle
velocity; for entangled states it defines reduced trajectories that may
cross.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import HBAR, Grid1D
from .fields import DENSITY_FLOOR, WaveField, WaveField1D
from .trajectories import TrajectoryEnsemble

#: Largest retained-axis size; the matrix is n x n complex.
MAX_RETAINED = 512


@dataclass
class ReducedDensity:
    """rho(x, x') on grid1d x grid1d at one instant."""

    grid1d: Grid1D
    rho_matrix: np.ndarray
    time: float = 0.0
    mass: float = 1.0

    def __post_init__(self):
        n = self.grid1d.n
        self.rho_matrix = np.asarray(self.rho_matrix, dtype=np.complex128)
        if self.rho_matrix.shape != (n, n):
            raise ValueError("rho_matrix must be (n, n) on the retained grid")

    @property
    def diagonal(self) -> np.ndarray:
        return np.real(np.diagonal(self.rho_matrix))

    def trace(self) -> float:
        return float(np.sum(self.diagonal) * self.grid1d.dx)

    def purity(self) -> float:
        """Tr(rho^2) by grid quadrature; 1 for a pure reduced state."""
        return float(np.sum(np.abs(self.rho_matrix) ** 2) * self.grid1d.dx**2)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.rho_matrix - self.rho_matrix.conj().T)))


def partial_trace(psi2d: WaveField, traced_axis: int = 1) -> ReducedDensity:
    """Trace out one coordinate: rho(x, x') = int psi(x, y) psi*(x', y) dy."""
    grid = psi2d.grid
    if traced_axis not in (0, 1):
        raise ValueError("traced_axis must be 0 or 1")
    kept = grid.axis_grid(1 - traced_axis)
    if kept.n > MAX_RETAINED:
        raise ValueError(f"retained axis {kept.n} exceeds the {MAX_RETAINED} cap")
    if traced_axis == 1:
        mat = psi2d.values @ psi2d.values.conj().T * grid.dy
    else:
        mat = psi2d.values.T @ psi2d.values.conj() * grid.dx
    return ReducedDensity(kept, mat, psi2d.time, psi2d.mass)


def _diag_gradient(rho: ReducedDensity) -> np.ndarray:
    """d/dx rho(x, x') along the first index, evaluated on the diagonal."""
    f = np.fft.fft(rho.rho_matrix, axis=0)
    f *= (1j * rho.grid1d.k_deriv)[:, None]
    return np.diagonal(np.fft.ifft(f, axis=0)).copy()


def reduced_flux(rho: ReducedDensity) -> np.ndarray:
    """J(x) = (hbar/m) Im[d/dx rho(x, x')]|_{x'=x}."""
    return HBAR / rho.mass * np.imag(_diag_gradient(rho))


def reduced_velocity(rho: ReducedDensity, floor: float = DENSITY_FLOOR) -> np.ma.MaskedArray:
    """Velocity of the reduced dynamics, masked below the density floor."""
    diag = rho.diagonal
    mask = diag < floor * diag.max()
    safe = np.where(mask, 1.0, diag)
    v = reduced_flux(rho) / safe
    v[mask] = 0.0
    return np.ma.MaskedArray(v, mask=mask)


def reduced_continuity_residual(rho_t0: ReducedDensity, rho_t1: ReducedDensity) -> float:
    """Max-norm of d(diag)/dt + dJ/dx between two snapshots (midpoint J)."""
    if rho_t0.grid1d != rho_t1.grid1d:
        raise ValueError("snapshots live on different grids")
    dt = rho_t1.time - rho_t0.time
    if dt <= 0:
        raise ValueError("snapshots must be time-ordered")
    drho = (rho_t1.diagonal - rho_t0.diagonal) / dt
    jmid = 0.5 * (reduced_flux(rho_t0) + reduced_flux(rho_t1))
    dj = np.real(np.fft.ifft(1j * rho_t0.grid1d.k_deriv * np.fft.fft(jmid)))
    return float(np.max(np.abs(drho + dj)))


def _velocity_arrays_1d(rho: ReducedDensity, floor: float):
    v = reduced_velocity(rho, floor)
    return np.ma.getdata(v), ~np.ma.getmaskarray(v)


def _interp_1d(values, valid, grid: Grid1D, pts):
    f = (pts - grid.x_min) / grid.dx
    ix = np.floor(f).astype(int)
    inside = (ix >= 0) & (ix <= grid.n - 2)
    ixc = np.clip(ix, 0, grid.n - 2)
    t = f - ixc
    vals = values[ixc] * (1 - t) + values[ixc + 1] * t
    ok = inside & valid[ixc] & valid[ixc + 1]
    return vals, ok


def integrate_reduced(positions0, reduced_list: list[ReducedDensity],
                      substeps: int = 4, floor: float = DENSITY_FLOOR) -> TrajectoryEnsemble:
    """RK4 through the time-interpolated reduced velocity field (1D)."""
    if len(reduced_list) < 2:
        raise ValueError("need at least two reduced snapshots")
    grid = reduced_list[0].grid1d
    mass = reduced_list[0].mass
    times = np.array([r.time for r in reduced_list])
    pos = np.asarray(positions0, dtype=float).copy()
    n, T = pos.shape[0], len(times)
    out = np.empty((n, T, 1))
    out[:, 0, 0] = pos
    active = np.ones(n, dtype=bool)
    masked_step = np.full(n, -1, dtype=int)

    v_lo = _velocity_arrays_1d(reduced_list[0], floor)
    for k in range(T - 1):
        v_hi = _velocity_arrays_1d(reduced_list[k + 1], floor)
        h = (times[k + 1] - times[k]) / substeps
        for s in range(substeps):
            if not active.any():
                break
            p = pos[active]
            ok_all = np.ones(len(p), dtype=bool)

            def vel(q, theta):
                nonlocal ok_all
                a, ok1 = _interp_1d(v_lo[0], v_lo[1], grid, q)
                b, ok2 = _interp_1d(v_hi[0], v_hi[1], grid, q)
                ok_all &= ok1 & ok2
                return (1 - theta) * a + theta * b

            th0 = s / substeps
            k1 = vel(p, th0)
            k2 = vel(p + 0.5 * h * k1, th0 + 0.5 / substeps)
            k3 = vel(p + 0.5 * h * k2, th0 + 0.5 / substeps)
            k4 = vel(p + h * k3, th0 + 1.0 / substeps)
            newp = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            idx = np.flatnonzero(active)
            pos[idx[ok_all]] = newp[ok_all]
            bad = idx[~ok_all]
            if bad.size:
                masked_step[bad] = k
                active[bad] = False
        out[:, k + 1, 0] = pos
        v_lo = v_hi

    masked = masked_step >= 0
    return TrajectoryEnsemble("reduced", times, out, None, masked, masked_step, mass)


def crossing_count(ensemble: TrajectoryEnsemble) -> int:
    """Number of adjacent-pair order inversions along a 1D ensemble.

    Zero for unentangled (single-particle) dynamics, where trajectories
    cannot cross; entangled reduced dynamics may produce crossings and the
    count serves as a diagnostic.
    """
    x = ensemble.positions[ensemble.valid, :, 0]
    order0 = np.argsort(x[:, 0])
    x = x[order0]
    diff = np.diff(x, axis=0)
    return int(np.count_nonzero(diff < 0))
