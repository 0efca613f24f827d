import numpy as np
import pytest

from qhydro.grid import Grid2D
from qhydro.fields import WaveField
from qhydro.io import (
    DiskSnapshots,
    MemorySnapshots,
    read_csv,
    read_field_bin,
    read_wavefield,
    write_arrow_csv,
    write_angular_csv,
    write_ensemble_csv,
    write_field_bin,
    write_field_csv,
    write_fractions_csv,
    write_path_csv,
    write_wavefield,
)
from qhydro.observables import FractionSeries
from qhydro.potentials import mueller_brown, mueller_brown_reaction_path
from qhydro.trajectories import TrajectoryEnsemble


@pytest.fixture
def field():
    grid = Grid2D(16, 32, -2.0, 2.0, -1.0, 3.0)
    rng = np.random.default_rng(0)
    vals = rng.normal(size=(16, 32)) + 1j * rng.normal(size=(16, 32))
    return WaveField(grid, vals, time=1.25, mass=1836.0)


def test_wavefield_binary_roundtrip(tmp_path, field):
    p = tmp_path / "f.bin"
    write_wavefield(p, field)
    back = read_wavefield(p)
    assert back.grid == field.grid
    assert back.time == field.time
    assert back.mass == field.mass
    assert np.array_equal(back.values, field.values)


def test_real_field_binary_roundtrip(tmp_path, field):
    p = tmp_path / "rho.bin"
    rho = np.abs(field.values) ** 2
    write_field_bin(p, field.grid, rho, time=0.5)
    grid, vals, t, mass = read_field_bin(p)
    assert grid == field.grid and t == 0.5
    assert vals.dtype == np.float64
    assert np.array_equal(vals, rho)


def test_binary_rejects_bad_magic(tmp_path):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"NOPE" + b"\0" * 100)
    with pytest.raises(ValueError, match="magic"):
        read_field_bin(p)


def test_disk_snapshots_match_memory(tmp_path, field):
    mem = MemorySnapshots()
    disk = DiskSnapshots(tmp_path / "snaps")
    for t in (0.0, 0.1, 0.2):
        f = field.copy()
        f.time = t
        mem.append(f)
        disk.append(f)
    reopened = DiskSnapshots.open(tmp_path / "snaps")
    assert len(reopened) == 3
    assert np.allclose(reopened.times, mem.times)
    for i in range(3):
        assert np.array_equal(reopened.wavefield(i).values, mem.wavefield(i).values)


def test_field_csv_roundtrip(tmp_path, field):
    p = tmp_path / "rho.csv"
    rho = np.abs(field.values) ** 2
    write_field_csv(p, field.grid, rho)
    data = read_csv(p)
    assert set(data.dtype.names) == {"x", "y", "value"}
    assert len(data) == 16 * 32
    X, Y = field.grid.meshgrid()
    assert np.allclose(data["value"].reshape(16, 32), rho)
    assert np.allclose(data["x"].reshape(16, 32), X)


def test_complex_field_csv(tmp_path, field):
    p = tmp_path / "psi.csv"
    write_field_csv(p, field.grid, field.values, decimate=2)
    data = read_csv(p)
    assert set(data.dtype.names) == {"x", "y", "re", "im"}
    assert len(data) == 8 * 16


def test_arrow_csv(tmp_path, field):
    p = tmp_path / "arrows.csv"
    vx = np.ones((16, 32))
    vy = np.zeros((16, 32))
    valid = np.ones((16, 32), dtype=bool)
    valid[0, :] = False
    write_arrow_csv(p, field.grid, vx, vy, valid, decimate=4)
    data = read_csv(p)
    assert set(data.dtype.names) == {"x", "y", "vx", "vy"}
    assert len(data) == 3 * 8  # one decimated row is fully invalid


def test_ensemble_csv(tmp_path):
    times = np.array([0.0, 0.5])
    pos = np.arange(2 * 2 * 2, dtype=float).reshape(2, 2, 2)
    mom = pos + 10.0
    ens = TrajectoryEnsemble("classical", times, pos, mom,
                             np.zeros(2, dtype=bool), np.full(2, -1), 1.0)
    p = tmp_path / "ens.csv"
    write_ensemble_csv(p, ens)
    data = read_csv(p)
    assert set(data.dtype.names) == {"id", "t", "x", "y", "px", "py"}
    assert len(data) == 4
    assert data["x"][2] == pos[1, 0, 0] and data["py"][3] == mom[1, 1, 1]


def test_fractions_csv_with_and_without_p(tmp_path):
    t = np.array([0.0, 1.0, 2.0])
    s = FractionSeries(t, np.array([0.0, 0.4, 0.5]), np.array([0.0, 0.4, 0.6]),
                       p=np.array([0.01, 0.39, 0.52]), n_valid=10, n_masked=0)
    p1 = tmp_path / "a.csv"
    write_fractions_csv(p1, s)
    d = read_csv(p1)
    assert set(d.dtype.names) == {"t", "W", "W_bar", "P"}
    assert np.allclose(d["P"], s.p)

    s2 = FractionSeries(t, s.w, s.w_bar, p=None, n_valid=10, n_masked=0)
    p2 = tmp_path / "b.csv"
    write_fractions_csv(p2, s2)
    d2 = read_csv(p2)
    assert np.all(np.isnan(d2["P"]))


def test_angular_csv(tmp_path):
    theta = np.linspace(-90, 90, 181)
    inten = np.exp(-(theta / 30.0) ** 2)
    p = tmp_path / "ang.csv"
    write_angular_csv(p, theta, inten / inten.sum())
    d = read_csv(p)
    assert set(d.dtype.names) == {"theta_deg", "intensity"}
    assert len(d) == 181


def test_path_csv(tmp_path):
    surf = mueller_brown()
    path = mueller_brown_reaction_path(surf)
    p = tmp_path / "path.csv"
    write_path_csv(p, path, surf)
    d = read_csv(p)
    assert set(d.dtype.names) == {"x", "y", "s", "V"}
    assert np.all(np.diff(d["s"]) >= 0)
    assert d["V"].min() < -140  # reaches the deep products minimum
