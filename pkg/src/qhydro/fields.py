"""Wavefunctions on grids and the hydrodynamic fields derived from them.

Density, probability flux, velocity, quantum potential and quantum
pressure tensor, plus bookkeeping diagnostics (continuity residual,
separability residual, Euler-equation residual).

Nodes where the density falls below ``DENSITY_FLOOR`` times its maximum
are reported as masked entries of :class:`numpy.ma.MaskedArray` rather
than numbers: the velocity and the quantum potential are singular at
wavefunction nodes and no finite value there is trustworthy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import HBAR, Grid1D, Grid2D, deriv_x, deriv_y, deriv_1d

#: Relative density floor below which derived point fields are masked.
DENSITY_FLOOR = 1e-12

#: Normalization tolerance enforced on construction and per propagation step.
NORM_TOL = 1e-9


@dataclass
class WaveField:
    """Complex wavefunction samples on a :class:`Grid2D` at one instant."""

    grid: Grid2D
    values: np.ndarray  # complex, shape (nx, ny)
    time: float = 0.0
    mass: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )
        if self.mass <= 0:
            raise ValueError("mass must be positive")

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_area)

    def normalize(self) -> "WaveField":
        """Rescale in place to unit norm; returns self."""
        n2 = self.norm_squared()
        if n2 <= 0:
            raise ValueError("cannot normalize a zero field")
        self.values /= np.sqrt(n2)
        return self

    def check_normalized(self, tol: float = NORM_TOL):
        n2 = self.norm_squared()
        if abs(n2 - 1.0) > tol:
            raise ValueError(f"field not normalized: |psi|^2 integrates to {n2!r}")

    def copy(self) -> "WaveField":
        return WaveField(self.grid, self.values.copy(), self.time, self.mass)


@dataclass
class WaveField1D:
    """1D counterpart of :class:`WaveField` (reduced and mixed dynamics)."""

    grid: Grid1D
    values: np.ndarray
    time: float = 0.0
    mass: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n,):
            raise ValueError("values shape does not match grid")

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def normalize(self) -> "WaveField1D":
        self.values /= np.sqrt(self.norm_squared())
        return self

    def copy(self) -> "WaveField1D":
        return WaveField1D(self.grid, self.values.copy(), self.time, self.mass)


# -- point fields -----------------------------------------------------------

def density(psi: WaveField) -> np.ndarray:
    """Probability density rho = |psi|^2."""
    return np.abs(psi.values) ** 2


def quantum_flux(psi: WaveField) -> np.ndarray:
    """Probability current J = (hbar/m) Im(psi* grad psi), shape (2, nx, ny)."""
    coeff = HBAR / psi.mass
    jx = coeff * np.imag(np.conj(psi.values) * deriv_x(psi.values, psi.grid))
    jy = coeff * np.imag(np.conj(psi.values) * deriv_y(psi.values, psi.grid))
    return np.stack([jx, jy])


def _mask_from(rho: np.ndarray, floor: float) -> np.ndarray:
    """Boolean mask, True where the density is below the relative floor."""
    return rho < floor * rho.max()


def quantum_potential(psi: WaveField, floor: float = DENSITY_FLOOR) -> np.ma.MaskedArray:
    """Quantum potential Q = -(hbar^2/2m) lap(R)/R, computed from rho.

    Uses the log-density form
    Q = -(hbar^2/4m) [lap(rho)/rho - (grad(rho)/rho)^2 / 2],
    which avoids the sign ambiguity of the amplitude R.  Masked below the
    density floor.
    """
    rho = density(psi)
    mask = _mask_from(rho, floor)
    gx = np.real(deriv_x(rho, psi.grid))
    gy = np.real(deriv_y(rho, psi.grid))
    lap = np.real(
        deriv_x(np.asarray(gx, dtype=complex), psi.grid)
        + deriv_y(np.asarray(gy, dtype=complex), psi.grid)
    )
    safe = np.where(mask, 1.0, rho)
    q = -(HBAR**2 / (4.0 * psi.mass)) * (lap / safe - 0.5 * (gx**2 + gy**2) / safe**2)
    return np.ma.MaskedArray(q, mask=mask)


def _pressure_components(rho: np.ndarray, grid: Grid2D, mass: float, mask: np.ndarray) -> np.ndarray:
    """P_ik = -(hbar^2/4m) (rho_ik - rho_i rho_k / rho); zero-filled on mask."""
    gx = np.real(deriv_x(rho, grid))
    gy = np.real(deriv_y(rho, grid))
    gxx = np.real(deriv_x(np.asarray(gx, dtype=complex), grid))
    gxy = np.real(deriv_y(np.asarray(gx, dtype=complex), grid))
    gyy = np.real(deriv_y(np.asarray(gy, dtype=complex), grid))
    safe = np.where(mask, 1.0, rho)
    c = -(HBAR**2) / (4.0 * mass)
    pxx = c * (gxx - gx * gx / safe)
    pxy = c * (gxy - gx * gy / safe)
    pyy = c * (gyy - gy * gy / safe)
    out = np.stack([np.stack([pxx, pxy]), np.stack([pxy, pyy])])
    out[:, :, mask] = 0.0
    return out


@dataclass
class HydroFields:
    """Bundle of hydrodynamic fields derived from one wavefunction snapshot.

    ``rho`` and ``flux`` are plain arrays; ``velocity``, ``qpot`` and
    ``pressure`` are masked below the density floor.
    """

    grid: Grid2D
    time: float
    mass: float
    rho: np.ndarray                  # (nx, ny)
    flux: np.ndarray                 # (2, nx, ny)
    velocity: np.ma.MaskedArray      # (2, nx, ny)
    qpot: np.ma.MaskedArray          # (nx, ny)
    pressure: np.ma.MaskedArray      # (2, 2, nx, ny)
    floor: float = DENSITY_FLOOR

    @property
    def masked_count(self) -> int:
        """Number of grid nodes below the density floor."""
        return int(np.count_nonzero(np.ma.getmaskarray(self.qpot)))


def hydro_fields(psi: WaveField, floor: float = DENSITY_FLOOR) -> HydroFields:
    """Compute all hydrodynamic fields of a snapshot."""
    rho = density(psi)
    mask = _mask_from(rho, floor)
    flux = quantum_flux(psi)
    safe = np.where(mask, 1.0, rho)
    vel = flux / safe
    vel[:, mask] = 0.0
    velocity = np.ma.MaskedArray(vel, mask=np.broadcast_to(mask, vel.shape))
    qpot = quantum_potential(psi, floor)
    pcomp = _pressure_components(rho, psi.grid, psi.mass, mask)
    pressure = np.ma.MaskedArray(pcomp, mask=np.broadcast_to(mask, pcomp.shape))
    return HydroFields(psi.grid, psi.time, psi.mass, rho, flux, velocity, qpot, pressure, floor)


def velocity_field(fields: HydroFields) -> np.ma.MaskedArray:
    """Velocity v = J/rho where rho is above the floor (masked elsewhere)."""
    return fields.velocity


def pressure_tensor(fields: HydroFields) -> np.ma.MaskedArray:
    """Quantum pressure tensor P = -(hbar^2/4m) rho grad grad ln(rho)."""
    return fields.pressure


def velocity_arrays(psi: WaveField, floor: float = DENSITY_FLOOR) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(vx, vy, valid) plain arrays for trajectory integration.

    Invalid nodes carry velocity zero and valid=False.
    """
    rho = density(psi)
    mask = _mask_from(rho, floor)
    flux = quantum_flux(psi)
    safe = np.where(mask, 1.0, rho)
    vx = np.where(mask, 0.0, flux[0] / safe)
    vy = np.where(mask, 0.0, flux[1] / safe)
    return vx, vy, ~mask


def density_1d(psi: WaveField1D) -> np.ndarray:
    return np.abs(psi.values) ** 2


def flux_1d(psi: WaveField1D) -> np.ndarray:
    dpsi = deriv_1d(psi.values, psi.grid)
    return HBAR / psi.mass * np.imag(np.conj(psi.values) * dpsi)


def velocity_1d(psi: WaveField1D, floor: float = DENSITY_FLOOR) -> np.ma.MaskedArray:
    """1D Bohmian velocity v = J/rho, masked below the density floor."""
    rho = density_1d(psi)
    mask = rho < floor * rho.max()
    safe = np.where(mask, 1.0, rho)
    v = flux_1d(psi) / safe
    v[mask] = 0.0
    return np.ma.MaskedArray(v, mask=mask)


# -- diagnostics ------------------------------------------------------------

def continuity_residual(psi_t0: WaveField, psi_t1: WaveField) -> float:
    """Max-norm of d(rho)/dt + div J between two consecutive snapshots.

    The time derivative is the centered difference and J is taken at the
    midpoint (average of the two snapshots), so the residual of an exact
    evolution is O(dt^2).
    """
    if psi_t0.grid != psi_t1.grid:
        raise ValueError("snapshots live on different grids")
    dt = psi_t1.time - psi_t0.time
    if dt <= 0:
        raise ValueError("snapshots must be time-ordered with dt > 0")
    drho = (density(psi_t1) - density(psi_t0)) / dt
    jmid = 0.5 * (quantum_flux(psi_t0) + quantum_flux(psi_t1))
    div = np.real(
        deriv_x(np.asarray(jmid[0], dtype=complex), psi_t0.grid)
        + deriv_y(np.asarray(jmid[1], dtype=complex), psi_t0.grid)
    )
    return float(np.max(np.abs(drho + div)))


def _quantum_potential_1d(values: np.ndarray, grid: Grid1D, mass: float,
                          floor: float = DENSITY_FLOOR) -> np.ma.MaskedArray:
    rho = np.abs(values) ** 2
    mask = rho < floor * rho.max()
    g = np.real(deriv_1d(rho, grid))
    lap = np.real(deriv_1d(rho, grid, order=2))
    safe = np.where(mask, 1.0, rho)
    q = -(HBAR**2 / (4.0 * mass)) * (lap / safe - 0.5 * g**2 / safe**2)
    return np.ma.MaskedArray(q, mask=mask)


def q_separability_residual(psi: WaveField, floor: float = DENSITY_FLOOR,
                            interior_floor: float = 1e-6) -> float:
    """How far Q(x,y) is from Q1(x) + Q2(y) built from 1D slices.

    The marginal factors are the 1D quantum potentials of the grid lines
    through the density maximum.  Zero (to spectral accuracy) for any
    product state psi1(x)*psi2(y); large for entangled states, where the
    value serves as an entanglement diagnostic.  Evaluated on nodes with
    density above ``interior_floor`` times the peak: Q is too
    ill-conditioned near the mask floor for the difference to be
    meaningful there.
    """
    rho = density(psi)
    i0, j0 = np.unravel_index(np.argmax(rho), rho.shape)
    q2d = quantum_potential(psi, floor)
    q1 = _quantum_potential_1d(psi.values[:, j0], psi.grid.axis_grid(0), psi.mass, floor)
    q2 = _quantum_potential_1d(psi.values[i0, :], psi.grid.axis_grid(1), psi.mass, floor)
    total = q2d - q1[:, np.newaxis] - q2[np.newaxis, :]
    select = ~np.ma.getmaskarray(total) & (rho >= interior_floor * rho.max())
    if not select.any():
        return 0.0
    return float(np.max(np.abs(np.ma.getdata(total)[select])))


def euler_residual(psi_t0: WaveField, psi_t1: WaveField, grad_v=None,
                   interior_floor: float = 1e-6) -> float:
    """Max-norm residual of m rho dv/dt + rho grad V + div P at the midpoint.

    ``grad_v`` is a callable (X, Y) -> (dV/dx, dV/dy); omit it for free
    evolution.  Spatial velocity gradients are evaluated pointwise through
    grad v = (grad J - v grad rho)/rho, so nothing is spectrally
    differentiated across masked nodes.  Measured on interior nodes where
    the midpoint density exceeds ``interior_floor`` times its maximum.
    """
    if psi_t0.grid != psi_t1.grid:
        raise ValueError("snapshots live on different grids")
    grid, mass = psi_t0.grid, psi_t0.mass
    dt = psi_t1.time - psi_t0.time
    rho0, rho1 = density(psi_t0), density(psi_t1)
    j0, j1 = quantum_flux(psi_t0), quantum_flux(psi_t1)
    rho = 0.5 * (rho0 + rho1)
    jmid = 0.5 * (j0 + j1)
    interior = rho >= interior_floor * rho.max()
    safe = np.where(interior, rho, 1.0)
    v = jmid / safe
    v0 = j0 / np.where(rho0 > 0, rho0, 1.0)
    v1 = j1 / np.where(rho1 > 0, rho1, 1.0)

    grho = np.stack([np.real(deriv_x(rho, grid)), np.real(deriv_y(rho, grid))])
    dvdt = (v1 - v0) / dt
    adv = np.zeros_like(v)
    for i in range(2):
        gj = np.stack([np.real(deriv_x(jmid[i], grid)), np.real(deriv_y(jmid[i], grid))])
        dv_i = (gj - v[i] * grho) / safe  # (2, nx, ny): [d/dx v_i, d/dy v_i]
        adv[i] = v[0] * dv_i[0] + v[1] * dv_i[1]

    mask = _mask_from(rho, DENSITY_FLOOR)
    p = _pressure_components(rho, grid, mass, mask)
    divp = np.stack([
        np.real(deriv_x(p[0, 0], grid) + deriv_y(p[0, 1], grid)),
        np.real(deriv_x(p[1, 0], grid) + deriv_y(p[1, 1], grid)),
    ])
    res = mass * rho * (dvdt + adv) + divp
    if grad_v is not None:
        X, Y = grid.meshgrid()
        gvx, gvy = grad_v(X, Y)
        res[0] += rho * gvx
        res[1] += rho * gvy
    return float(np.max(np.abs(res[:, interior])))
