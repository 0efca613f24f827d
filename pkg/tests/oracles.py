"""Closed-form reference states used as test oracles.

Everything here is built directly from textbook formulas (free Gaussian
evolution in momentum space, harmonic-oscillator eigenstates and coherent
states) and never calls the propagator, so a comparison against these
states checks the solver against an independent route.
"""

import numpy as np

from qhydro.grid import Grid1D, Grid2D
from qhydro.fields import WaveField, WaveField1D

HBAR = 1.0


def free_gaussian_1d(x, t, sigma0, mass, center=0.0, momentum=0.0):
    """Exact free evolution of a Gaussian packet (1D factor).

    psi0(x) = (2 pi s0^2)^(-1/4) exp(-(x-c)^2/4 s0^2 + i p (x-c)),
    evolved analytically: Fourier transform, free phase, transform back.
    """
    a = sigma0 + 1j * HBAR * t / (2.0 * mass * sigma0)
    xs = x - center - momentum * t / mass
    base = (2 * np.pi * sigma0**2) ** (-0.25) * np.sqrt(sigma0 / a) * np.exp(-xs**2 / (4 * sigma0 * a))
    boost = np.exp(1j * (momentum * (x - center) - 0.5 * momentum**2 * t / mass) / HBAR)
    return base * boost


def sigma_of_t(t, sigma0, mass):
    return sigma0 * np.sqrt(1.0 + (HBAR * t / (2.0 * mass * sigma0**2)) ** 2)


def free_gaussian_velocity(t, sigma0, mass):
    """Slope of the self-similar velocity field v(x,t) = c(t) (x - center)."""
    return HBAR**2 * t / (4.0 * mass**2 * sigma0**4 + HBAR**2 * t**2)


def free_gaussian_2d(grid: Grid2D, t, sigma, mass, center=(0.0, 0.0), momentum=(0.0, 0.0)):
    sx, sy = (sigma, sigma) if np.isscalar(sigma) else sigma
    X, Y = grid.meshgrid()
    vals = (free_gaussian_1d(X, t, sx, mass, center[0], momentum[0])
            * free_gaussian_1d(Y, t, sy, mass, center[1], momentum[1]))
    return WaveField(grid, vals, t, mass)


def ho_eigenstate_1d(x, n, omega, mass):
    """Harmonic-oscillator eigenstate (n = 0 or 1)."""
    s2 = HBAR / (mass * omega)
    psi0 = (mass * omega / (np.pi * HBAR)) ** 0.25 * np.exp(-x**2 / (2 * s2))
    if n == 0:
        return psi0
    if n == 1:
        return np.sqrt(2.0 / s2) * x * psi0
    raise ValueError("only n = 0, 1 provided")


def ho_ground_2d(grid: Grid2D, omega, mass) -> WaveField:
    X, Y = grid.meshgrid()
    vals = ho_eigenstate_1d(X, 0, omega, mass) * ho_eigenstate_1d(Y, 0, omega, mass)
    return WaveField(grid, vals.astype(complex), 0.0, mass)


def ho_coherent_1d(x, t, omega, mass, amplitude):
    """Coherent state with center xc(t) = A cos(w t); global phase dropped
    (all derived fields are phase invariant)."""
    xc = amplitude * np.cos(omega * t)
    vc = -amplitude * omega * np.sin(omega * t)
    s2 = HBAR / (2.0 * mass * omega)   # position variance
    norm = (2 * np.pi * s2) ** (-0.25)
    return norm * np.exp(-(x - xc) ** 2 / (4 * s2) + 1j * mass * vc * (x - xc) / HBAR)


def plane_wave(grid: Grid2D, n_x, n_y, mass) -> WaveField:
    """Exact grid mode exp(i k r) with k = 2 pi (n_x/Lx, n_y/Ly)."""
    X, Y = grid.meshgrid()
    kx = 2 * np.pi * n_x / (grid.x_max - grid.x_min)
    ky = 2 * np.pi * n_y / (grid.y_max - grid.y_min)
    vals = np.exp(1j * (kx * X + ky * Y))
    return WaveField(grid, vals, 0.0, mass).normalize()


def uniform_in_y(grid: Grid2D, fx, mass) -> WaveField:
    """Product of a 1D profile in x and a uniform factor in y."""
    vals = np.repeat(fx[:, None], grid.ny, axis=1).astype(complex)
    return WaveField(grid, vals, 0.0, mass).normalize()


def wavefield_product(grid: Grid2D, fx, fy, mass) -> WaveField:
    return WaveField(grid, np.outer(fx, fy).astype(complex), 0.0, mass).normalize()


def wavefield1d(grid: Grid1D, values, mass, t=0.0) -> WaveField1D:
    return WaveField1D(grid, np.asarray(values, dtype=complex), t, mass).normalize()
