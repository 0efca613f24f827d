"""Uniform periodic grids and spectral differentiation.

The periodic convention excludes the last point: x_i = x_min + i*dx with
dx = (x_max - x_min)/nx, so x_max is the image of x_min.  All derivatives
are Fourier (spectral) derivatives on that grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

HBAR = 1.0  # Hartree atomic units throughout


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic 1D grid with n a power of two (>= 8)."""

    n: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if self.n < 8 or not _is_pow2(self.n):
            raise ValueError(f"grid size must be a power of two >= 8, got n={self.n}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @cached_property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def k_deriv(self) -> np.ndarray:
        """Wavenumbers for odd-order derivatives: Nyquist zeroed so the
        derivative of a real field stays real."""
        k = self.k.copy()
        k[self.n // 2] = 0.0
        return k


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic rectangular grid; nx, ny powers of two (>= 8)."""

    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n < 8 or not _is_pow2(n):
                raise ValueError(f"{name} must be a power of two >= 8, got {n}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid bounds must satisfy max > min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return self.y_min + self.dy * np.arange(self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (nx, ny), 'ij' indexing."""
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def kx(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    @cached_property
    def ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy)

    @cached_property
    def kx_deriv(self) -> np.ndarray:
        k = self.kx.copy()
        k[self.nx // 2] = 0.0
        return k

    @cached_property
    def ky_deriv(self) -> np.ndarray:
        k = self.ky.copy()
        k[self.ny // 2] = 0.0
        return k

    def axis_grid(self, axis: int) -> Grid1D:
        """The 1D grid along one axis (0 -> x, 1 -> y)."""
        if axis == 0:
            return Grid1D(self.nx, self.x_min, self.x_max)
        if axis == 1:
            return Grid1D(self.ny, self.y_min, self.y_max)
        raise ValueError("axis must be 0 or 1")


# -- spectral derivatives ---------------------------------------------------

def deriv_x(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """d/dx along axis 0 (Fourier, Nyquist dropped)."""
    f = np.fft.fft(values, axis=0)
    f *= (1j * grid.kx_deriv)[:, None]
    return np.fft.ifft(f, axis=0)


def deriv_y(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """d/dy along axis 1 (Fourier, Nyquist dropped)."""
    f = np.fft.fft(values, axis=1)
    f *= (1j * grid.ky_deriv)[None, :]
    return np.fft.ifft(f, axis=1)


def laplacian(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    f = np.fft.fft2(values)
    f *= -(grid.kx[:, None] ** 2 + grid.ky[None, :] ** 2)
    return np.fft.ifft2(f)


def deriv_1d(values: np.ndarray, grid: Grid1D, order: int = 1) -> np.ndarray:
    k = grid.k_deriv if order % 2 else grid.k
    f = np.fft.fft(values)
    f *= (1j * k) ** order
    return np.fft.ifft(f)
