"""Initial-condition sampling and trajectory ensemble integration.

Bohmian trajectories are streamlines of the velocity field derived from
saved wavefunction snapshots: 4th-order Runge-Kutta through a field that
is bilinear in space and linear in time between snapshots, with four
substeps per snapshot interval.  Classical ensembles use velocity Verlet
on the potential surface.

A Bohmian trajectory that reaches a masked (density below floor) node or
leaves the grid is frozen there, flagged with the snapshot index where
interpolation failed, and excluded from fraction counts downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import HBAR, Grid2D
from .fields import DENSITY_FLOOR, WaveField, density, quantum_flux, velocity_arrays
from .propagate import InitialState
from .potentials import PotentialSurface


@dataclass
class SamplingSpec:
    """How to draw ensemble initial conditions.

    ``bohmian_rho0`` and ``classical_rho0`` draw positions from |psi0|^2
    with momenta fixed at the packet's mean momentum (a delta
    distribution); ``classical_wigner`` draws positions and momenta from
    the Gaussian Wigner transform of the packet (position variance
    sigma^2, momentum variance hbar^2/4 sigma^2 per dimension).
    """

    kind: str
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("bohmian_rho0", "classical_rho0", "classical_wigner"):
            raise ValueError(f"unknown sampling kind: {self.kind!r}")
        if self.n <= 0:
            raise ValueError("ensemble size n must be positive")


@dataclass
class InitialConditions:
    positions: np.ndarray            # (n, 2)
    momenta: np.ndarray | None       # (n, 2) for classical kinds, else None
    kind: str = "bohmian_rho0"


@dataclass
class TrajectoryEnsemble:
    """Labelled paths at saved times; masked rows record where they failed."""

    kind: str                        # bohmian | classical | reduced
    times: np.ndarray                # (T,)
    positions: np.ndarray            # (n, T, d)
    momenta: np.ndarray | None       # (n, T, d) classical only
    masked: np.ndarray               # (n,) bool
    masked_step: np.ndarray          # (n,) snapshot index of failure, -1 if ok
    mass: float = 1.0

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return ~self.masked

    @property
    def masked_count(self) -> int:
        return int(np.count_nonzero(self.masked))


def _mean_momentum(psi: WaveField) -> np.ndarray:
    j = quantum_flux(psi)
    return psi.mass * np.array([j[0].sum(), j[1].sum()]) * psi.grid.cell_area


def _rejection_sample(rho: np.ndarray, grid: Grid2D, n: int, rng) -> np.ndarray:
    peak = rho.max()
    live = rho > 1e-12 * peak
    ii, jj = np.nonzero(live)
    xlo, xhi = grid.x[ii.min()], grid.x[min(ii.max() + 1, grid.nx - 1)]
    ylo, yhi = grid.y[jj.min()], grid.y[min(jj.max() + 1, grid.ny - 1)]
    out = np.empty((n, 2))
    have = 0
    while have < n:
        m = max(4 * (n - have), 1024)
        pts = np.column_stack([rng.uniform(xlo, xhi, m), rng.uniform(ylo, yhi, m)])
        vals, ok = _bilinear(rho, np.ones_like(rho, dtype=bool), grid, pts)
        accept = ok & (rng.uniform(0.0, peak, m) < vals)
        take = min(n - have, int(accept.sum()))
        out[have:have + take] = pts[accept][:take]
        have += take
    return out


def sample(spec: SamplingSpec, psi0: WaveField, state: InitialState | None = None) -> InitialConditions:
    """Draw reproducible initial conditions for one ensemble.

    For a ``gaussian2d`` initial state the position (and Wigner momentum)
    draws are exact Gaussians; otherwise positions are rejection-sampled
    against the grid density.  ``classical_wigner`` requires a gaussian2d
    state.
    """
    rng = np.random.default_rng(spec.seed)
    gaussian = state is not None and state.kind == "gaussian2d"

    if gaussian:
        (x0, y0), (sx, sy) = state.center, state.widths
        positions = np.column_stack([rng.normal(x0, sx, spec.n), rng.normal(y0, sy, spec.n)])
    else:
        positions = _rejection_sample(density(psi0), psi0.grid, spec.n, rng)

    if spec.kind == "bohmian_rho0":
        return InitialConditions(positions, None, spec.kind)
    if spec.kind == "classical_rho0":
        p0 = np.asarray(state.momenta, dtype=float) if gaussian else _mean_momentum(psi0)
        return InitialConditions(positions, np.tile(p0, (spec.n, 1)), spec.kind)
    if not gaussian:
        raise ValueError("classical_wigner sampling requires a gaussian2d initial state")
    (px0, py0), (sx, sy) = state.momenta, state.widths
    momenta = np.column_stack([
        rng.normal(px0, HBAR / (2.0 * sx), spec.n),
        rng.normal(py0, HBAR / (2.0 * sy), spec.n),
    ])
    return InitialConditions(positions, momenta, spec.kind)


# -- interpolation -----------------------------------------------------------

def _bilinear(field: np.ndarray, valid: np.ndarray, grid: Grid2D,
              pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear interpolation at pts (m, 2); ok=False outside the grid or
    when any of the four surrounding nodes is invalid."""
    fx = (pts[:, 0] - grid.x_min) / grid.dx
    fy = (pts[:, 1] - grid.y_min) / grid.dy
    ix = np.floor(fx).astype(int)
    iy = np.floor(fy).astype(int)
    inside = (ix >= 0) & (ix <= grid.nx - 2) & (iy >= 0) & (iy <= grid.ny - 2)
    ixc = np.clip(ix, 0, grid.nx - 2)
    iyc = np.clip(iy, 0, grid.ny - 2)
    tx = fx - ixc
    ty = fy - iyc
    f00 = field[ixc, iyc]
    f10 = field[ixc + 1, iyc]
    f01 = field[ixc, iyc + 1]
    f11 = field[ixc + 1, iyc + 1]
    vals = (f00 * (1 - tx) * (1 - ty) + f10 * tx * (1 - ty)
            + f01 * (1 - tx) * ty + f11 * tx * ty)
    ok = inside & valid[ixc, iyc] & valid[ixc + 1, iyc] & valid[ixc, iyc + 1] & valid[ixc + 1, iyc + 1]
    return vals, ok


def _interp_velocity(vfield, grid, pts):
    """vfield = (vx, vy, valid) arrays; returns ((m,2) velocities, ok)."""
    vx, vy, valid = vfield
    ux, okx = _bilinear(vx, valid, grid, pts)
    uy, _ = _bilinear(vy, valid, grid, pts)
    return np.column_stack([ux, uy]), okx


def integrate_bohmian(initial, snapshots, substeps: int = 4,
                      floor: float = DENSITY_FLOOR) -> TrajectoryEnsemble:
    """RK4 integration of dr/dt = v(r, t) through saved snapshots.

    ``snapshots`` is a store with .times and .wavefield(i) (memory- or
    disk-backed); the velocity field is bilinear in space and linear in
    time between consecutive snapshots, with ``substeps`` RK4 steps per
    interval.
    """
    positions0 = initial.positions if isinstance(initial, InitialConditions) else np.asarray(initial, dtype=float)
    times = snapshots.times
    if len(times) < 2:
        raise ValueError("need at least two snapshots")
    psi0 = snapshots.wavefield(0)
    grid, mass = psi0.grid, psi0.mass

    n = positions0.shape[0]
    T = len(times)
    out = np.empty((n, T, 2))
    out[:, 0] = positions0
    pos = positions0.copy()
    active = np.ones(n, dtype=bool)
    masked_step = np.full(n, -1, dtype=int)

    v_lo = velocity_arrays(psi0, floor)
    for k in range(T - 1):
        v_hi = velocity_arrays(snapshots.wavefield(k + 1), floor)
        h = (times[k + 1] - times[k]) / substeps
        for s in range(substeps):
            if not active.any():
                break
            p = pos[active]
            th0 = s / substeps
            ok_all = np.ones(len(p), dtype=bool)

            def vel(q, theta):
                nonlocal ok_all
                a, ok1 = _interp_velocity(v_lo, grid, q)
                b, ok2 = _interp_velocity(v_hi, grid, q)
                ok_all &= ok1 & ok2
                return (1.0 - theta) * a + theta * b

            k1 = vel(p, th0)
            k2 = vel(p + 0.5 * h * k1, th0 + 0.5 / substeps)
            k3 = vel(p + 0.5 * h * k2, th0 + 0.5 / substeps)
            k4 = vel(p + h * k3, th0 + 1.0 / substeps)
            newp = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

            idx = np.flatnonzero(active)
            bad = idx[~ok_all]
            good = idx[ok_all]
            pos[good] = newp[ok_all]
            if bad.size:
                masked_step[bad] = k
                active[bad] = False
        out[:, k + 1] = pos
        v_lo = v_hi

    masked = masked_step >= 0
    return TrajectoryEnsemble("bohmian", times, out, None, masked, masked_step, mass)


def integrate_classical(initial: InitialConditions, surface: PotentialSurface,
                        dt: float, n_steps: int, mass: float,
                        record_every: int = 1) -> TrajectoryEnsemble:
    """Velocity-Verlet integration on the potential surface."""
    if initial.momenta is None:
        raise ValueError("classical integration requires sampled momenta")
    pos = initial.positions.copy()
    mom = initial.momenta.copy()
    n = pos.shape[0]

    rec_steps = list(range(0, n_steps + 1, record_every))
    if rec_steps[-1] != n_steps:
        rec_steps.append(n_steps)
    times = dt * np.asarray(rec_steps, dtype=float)
    T = len(rec_steps)
    out_p = np.empty((n, T, 2))
    out_m = np.empty((n, T, 2))
    out_p[:, 0], out_m[:, 0] = pos, mom
    nxt = 1

    gx, gy = surface.gradient(pos[:, 0], pos[:, 1])
    force = -np.column_stack([gx, gy])
    for step_i in range(1, n_steps + 1):
        mom_half = mom + 0.5 * dt * force
        pos = pos + dt * mom_half / mass
        gx, gy = surface.gradient(pos[:, 0], pos[:, 1])
        force = -np.column_stack([gx, gy])
        mom = mom_half + 0.5 * dt * force
        if nxt < T and step_i == rec_steps[nxt]:
            out_p[:, nxt], out_m[:, nxt] = pos, mom
            nxt += 1

    masked = np.zeros(n, dtype=bool)
    return TrajectoryEnsemble("classical", times, out_p, out_m, masked,
                              np.full(n, -1, dtype=int), mass)
