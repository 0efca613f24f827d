"""Mixed quantum-classical dynamics: a light quantum coordinate x coupled
to a heavy quasi-classical coordinate y.

The light coordinate follows a 1D Schroedinger equation whose potential is
evaluated at the instantaneous heavy position, V(x, y(t)); the heavy
coordinate follows Newtonian motion under the backreaction force.  One
step is a symmetric leapfrog composition: half-kick of (y, p_y), full
split-operator step of psi at the midpoint y, half-kick to complete.

Backreaction modes
------------------
``expectation``
    F_y = -<dV/dy>_{|psi|^2}.  The quantum-potential gradient term carries
    no explicit y dependence in the factorized ansatz (Q is a functional
    of psi(x) alone) and contributes zero here; the quantum influence on y
    enters through the evolution of psi.  Deterministic.
``trajectory``
    F_y = -dV/dy evaluated at a single conditional trajectory x(t)
    transported by the 1D velocity field of psi.

The Newtonian sign (force = minus the gradient) is used throughout; the
separable-potential limit then reproduces plain classical motion of y
exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .grid import HBAR
from .fields import WaveField1D, density_1d, velocity_1d
from .propagate import Propagator1D, kinetic_expectation_1d

MIN_MASS_RATIO = 10.0
WARN_MASS_RATIO = 100.0


@dataclass
class BilinearHarmonic:
    """V(x, y) = mx wx^2 x^2/2 + my wy^2 y^2/2 + lam x y."""

    mx: float
    my: float
    wx: float
    wy: float
    lam: float = 0.0

    def value(self, x, y):
        return (0.5 * self.mx * self.wx**2 * np.asarray(x) ** 2
                + 0.5 * self.my * self.wy**2 * np.asarray(y) ** 2
                + self.lam * np.asarray(x) * np.asarray(y))

    def gradient(self, x, y):
        gx = self.mx * self.wx**2 * np.asarray(x) + self.lam * np.asarray(y)
        gy = self.my * self.wy**2 * np.asarray(y) + self.lam * np.asarray(x)
        return gx, gy


@dataclass
class MixedState:
    """Light 1D wavefunction plus one heavy classical degree of freedom.

    ``potential`` is any object with value(x, y) and gradient(x, y)
    (a PotentialSurface or BilinearHarmonic).  ``x_cond`` carries the
    conditional trajectory for the ``trajectory`` backreaction mode.
    """

    psi_x: WaveField1D
    y: float
    p_y: float
    m_y: float
    potential: object
    time: float = 0.0
    x_cond: float | None = None

    def __post_init__(self):
        ratio = self.m_y / self.psi_x.mass
        if ratio < MIN_MASS_RATIO:
            raise ValueError(f"mass ratio m_y/m_x = {ratio:.3g} below the "
                             f"validity limit {MIN_MASS_RATIO}")
        if ratio < WARN_MASS_RATIO:
            warnings.warn(f"mass ratio m_y/m_x = {ratio:.3g} < {WARN_MASS_RATIO}: "
                          "quasi-classical treatment of y is marginal")

    def x_mean(self) -> float:
        rho = density_1d(self.psi_x)
        return float(np.sum(self.psi_x.grid.x * rho) * self.psi_x.grid.dx)


def backreaction_force(state: MixedState, mode: str = "expectation") -> float:
    """Force on the heavy coordinate (Newtonian sign)."""
    if mode == "expectation":
        rho = density_1d(state.psi_x)
        _, gy = state.potential.gradient(state.psi_x.grid.x, state.y)
        return float(-np.sum(gy * rho) * state.psi_x.grid.dx)
    if mode == "trajectory":
        if state.x_cond is None:
            raise ValueError("trajectory mode requires x_cond to be set")
        _, gy = state.potential.gradient(state.x_cond, state.y)
        return float(-gy)
    raise ValueError(f"unknown backreaction mode: {mode!r}")


def total_energy(state: MixedState) -> float:
    """<T_x> + <V(x, y)>_{|psi|^2} + p_y^2/2m_y."""
    rho = density_1d(state.psi_x)
    v = state.potential.value(state.psi_x.grid.x, state.y)
    pot = float(np.sum(v * rho) * state.psi_x.grid.dx)
    return kinetic_expectation_1d(state.psi_x) + pot + state.p_y**2 / (2.0 * state.m_y)


def _interp_velocity_at(psi: WaveField1D, x: float) -> float:
    v = velocity_1d(psi)
    vals = np.ma.getdata(v)
    grid = psi.grid
    f = (x - grid.x_min) / grid.dx
    i = int(np.clip(np.floor(f), 0, grid.n - 2))
    t = f - i
    return float(vals[i] * (1 - t) + vals[i + 1] * t)


def mixed_step(state: MixedState, dt: float, mode: str = "expectation",
               _prop: Propagator1D | None = None) -> MixedState:
    """One leapfrog-coupled step of size dt."""
    prop = _prop or Propagator1D(state.psi_x.grid, state.psi_x.mass, dt)
    f0 = backreaction_force(state, mode)
    p_half = state.p_y + 0.5 * dt * f0
    y_mid = state.y + 0.5 * dt * p_half / state.m_y

    v_mid = state.potential.value(state.psi_x.grid.x, y_mid)
    new_vals = prop.step_values(state.psi_x.values, v_mid)
    if np.isnan(new_vals.view(float)).any():
        raise FloatingPointError(f"NaN in psi at t={state.time:.6g}; reduce dt")
    psi_new = WaveField1D(state.psi_x.grid, new_vals, state.time + dt, state.psi_x.mass)

    x_cond = state.x_cond
    if mode == "trajectory":
        v_old = _interp_velocity_at(state.psi_x, x_cond)
        x_pred = x_cond + dt * v_old
        v_new = _interp_velocity_at(psi_new, x_pred)
        x_cond = x_cond + 0.5 * dt * (v_old + v_new)

    y_new = y_mid + 0.5 * dt * p_half / state.m_y
    tmp = replace(state, psi_x=psi_new, y=y_new, x_cond=x_cond, time=state.time + dt)
    f1 = backreaction_force(tmp, mode)
    return replace(tmp, p_y=p_half + 0.5 * dt * f1)


@dataclass
class MixedRun:
    times: np.ndarray
    y: np.ndarray
    p_y: np.ndarray
    x_mean: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    densities: np.ndarray | None = None   # (T, nx) when recorded


def run_mixed(state: MixedState, dt: float, n_steps: int, record_every: int = 1,
              mode: str = "expectation", keep_densities: bool = False) -> tuple[MixedState, MixedRun]:
    """Integrate n_steps, recording the (t, y, p_y, <x>, E, norm) series."""
    prop = Propagator1D(state.psi_x.grid, state.psi_x.mass, dt)
    rec_t, rec_y, rec_p, rec_x, rec_e, rec_n = [], [], [], [], [], []
    dens = [] if keep_densities else None

    def record(s: MixedState):
        rec_t.append(s.time)
        rec_y.append(s.y)
        rec_p.append(s.p_y)
        rec_x.append(s.x_mean())
        rec_e.append(total_energy(s))
        rec_n.append(s.psi_x.norm_squared())
        if dens is not None:
            dens.append(density_1d(s.psi_x))

    record(state)
    for n in range(1, n_steps + 1):
        state = mixed_step(state, dt, mode, _prop=prop)
        if n % record_every == 0 or n == n_steps:
            record(state)
    run = MixedRun(np.array(rec_t), np.array(rec_y), np.array(rec_p),
                   np.array(rec_x), np.array(rec_e), np.array(rec_n),
                   np.array(dens) if dens is not None else None)
    return state, run
