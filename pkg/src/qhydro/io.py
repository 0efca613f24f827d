"""File formats: compact binary field dumps, CSV exports, snapshot stores.

Binary field format (little endian):

    magic   4 bytes  b"QHF1"
    version u8       1
    dtype   u8       0 = float64, 1 = complex128
    nx, ny  2 x i64
    bounds  4 x f64  x_min, x_max, y_min, y_max
    time    f64
    mass    f64
    payload row-major values (nx*ny float64 or complex128)

CSV files carry a single header line naming the columns.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import Grid2D
from .fields import WaveField

_MAGIC = b"QHF1"
_HEADER = struct.Struct("<4sBBqqdddddd")


def write_field_bin(path, grid: Grid2D, values: np.ndarray, time: float = 0.0,
                    mass: float = 1.0):
    values = np.ascontiguousarray(values)
    if values.shape != (grid.nx, grid.ny):
        raise ValueError("values shape does not match grid")
    if values.dtype == np.complex128:
        flag = 1
    elif values.dtype == np.float64:
        flag = 0
    else:
        raise ValueError("payload must be float64 or complex128")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, flag, grid.nx, grid.ny,
                              grid.x_min, grid.x_max, grid.y_min, grid.y_max,
                              time, mass))
        fh.write(values.tobytes())


def read_field_bin(path) -> tuple[Grid2D, np.ndarray, float, float]:
    """Returns (grid, values, time, mass)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, flag, nx, ny, x0, x1, y0, y1, time, mass = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a field dump (bad magic)")
        if version != 1:
            raise ValueError(f"{path}: unsupported format version {version}")
        dtype = np.complex128 if flag == 1 else np.float64
        payload = np.frombuffer(fh.read(), dtype=dtype).reshape(nx, ny).copy()
    return Grid2D(nx, ny, x0, x1, y0, y1), payload, time, mass


def write_wavefield(path, psi: WaveField):
    write_field_bin(path, psi.grid, psi.values, psi.time, psi.mass)


def read_wavefield(path) -> WaveField:
    grid, values, time, mass = read_field_bin(path)
    return WaveField(grid, values, time, mass)


# -- snapshot stores ---------------------------------------------------------

class MemorySnapshots:
    """In-memory snapshot sequence (small runs, tests)."""

    def __init__(self):
        self._fields: list[WaveField] = []

    def append(self, psi: WaveField):
        self._fields.append(psi.copy())

    def __len__(self):
        return len(self._fields)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.time for f in self._fields])

    def wavefield(self, i: int) -> WaveField:
        return self._fields[i]


class DiskSnapshots:
    """Directory-backed snapshot sequence; loads fields lazily.

    Files are named ``field_NNNNN.bin`` in append order.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._paths: list[Path] = []
        self._times: list[float] = []

    @classmethod
    def open(cls, directory) -> "DiskSnapshots":
        store = cls(directory)
        for p in sorted(store.directory.glob("field_*.bin")):
            with open(p, "rb") as fh:
                head = _HEADER.unpack(fh.read(_HEADER.size))
            store._paths.append(p)
            store._times.append(head[9])
        return store

    def append(self, psi: WaveField):
        path = self.directory / f"field_{len(self._paths):05d}.bin"
        write_wavefield(path, psi)
        self._paths.append(path)
        self._times.append(psi.time)

    def __len__(self):
        return len(self._paths)

    @property
    def times(self) -> np.ndarray:
        return np.array(self._times)

    def wavefield(self, i: int) -> WaveField:
        return read_wavefield(self._paths[i])


# -- CSV exports -------------------------------------------------------------

def _savetxt(path, columns: dict):
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float).ravel() for n in names])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="")


def read_csv(path) -> np.ndarray:
    """Structured array with fields named by the header line."""
    return np.genfromtxt(path, delimiter=",", names=True)


def write_field_csv(path, grid: Grid2D, values: np.ndarray, decimate: int = 1):
    """Scalar field as (x, y, value) rows; complex fields as (x, y, re, im)."""
    X, Y = grid.meshgrid()
    sl = (slice(None, None, decimate), slice(None, None, decimate))
    if np.iscomplexobj(values):
        _savetxt(path, {"x": X[sl], "y": Y[sl],
                        "re": values[sl].real, "im": values[sl].imag})
    else:
        _savetxt(path, {"x": X[sl], "y": Y[sl], "value": values[sl]})


def write_arrow_csv(path, grid: Grid2D, vx: np.ndarray, vy: np.ndarray,
                    valid: np.ndarray | None = None, decimate: int = 8):
    """Velocity arrow map (x, y, vx, vy) on a decimated grid."""
    X, Y = grid.meshgrid()
    sl = (slice(None, None, decimate), slice(None, None, decimate))
    keep = np.ones_like(X[sl], dtype=bool) if valid is None else valid[sl]
    _savetxt(path, {"x": X[sl][keep], "y": Y[sl][keep],
                    "vx": vx[sl][keep], "vy": vy[sl][keep]})


def write_path_csv(path, reaction_path, surface=None):
    """Reaction path as (x, y, s, V)."""
    pts = reaction_path.points
    v = surface.value(pts[:, 0], pts[:, 1]) if surface is not None else np.zeros(len(pts))
    _savetxt(path, {"x": pts[:, 0], "y": pts[:, 1], "s": reaction_path.arc_length, "V": v})


def write_ensemble_csv(path, ensemble):
    """Trajectories in long format: id, t, x, y[, px, py]."""
    n, T, d = ensemble.positions.shape
    ids = np.repeat(np.arange(n), T)
    ts = np.tile(ensemble.times, n)
    cols = {"id": ids, "t": ts,
            "x": ensemble.positions[:, :, 0].ravel()}
    if d > 1:
        cols["y"] = ensemble.positions[:, :, 1].ravel()
    if ensemble.momenta is not None:
        cols["px"] = ensemble.momenta[:, :, 0].ravel()
        if d > 1:
            cols["py"] = ensemble.momenta[:, :, 1].ravel()
    _savetxt(path, cols)


def write_fractions_csv(path, series):
    """(t, W, W_bar, P) rows; P is NaN where no field norm is available."""
    p = series.p if series.p is not None else np.full_like(series.times, np.nan)
    _savetxt(path, {"t": series.times, "W": series.w, "W_bar": series.w_bar, "P": p})


def write_angular_csv(path, theta_deg, intensity):
    _savetxt(path, {"theta_deg": theta_deg, "intensity": intensity})
