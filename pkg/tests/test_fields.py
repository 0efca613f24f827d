import numpy as np
import pytest

from qhydro.grid import Grid2D
from qhydro.fields import (
    WaveField,
    density,
    quantum_flux,
    quantum_potential,
    hydro_fields,
    velocity_field,
    pressure_tensor,
    continuity_residual,
    q_separability_residual,
    euler_residual,
)

from oracles import (
    free_gaussian_2d,
    free_gaussian_velocity,
    ho_eigenstate_1d,
    ho_ground_2d,
    ho_coherent_1d,
    plane_wave,
    uniform_in_y,
    wavefield_product,
)

SIGMA0 = np.sqrt(0.0125)


@pytest.fixture(scope="module")
def small_grid():
    return Grid2D(64, 64, -1.0, 1.0, -1.0, 1.0)


@pytest.fixture(scope="module")
def wide_grid():
    return Grid2D(128, 128, -8.0, 8.0, -8.0, 8.0)


def packet(grid, momenta=(0.0, 0.0), mass=1836.0, sigma=SIGMA0):
    return free_gaussian_2d(grid, 0.0, sigma, mass, momentum=momenta)


# -- density -----------------------------------------------------------------

def test_density_gaussian_peak(small_grid):
    psi = packet(small_grid)
    rho = density(psi)
    i = small_grid.nx // 2
    j = small_grid.ny // 2
    assert small_grid.x[i] == 0.0 and small_grid.y[j] == 0.0
    expected = 1.0 / (2 * np.pi * SIGMA0**2)
    assert abs(rho[i, j] - expected) < 1e-9 * expected
    assert abs(np.sum(rho) * small_grid.cell_area - 1.0) < 1e-9


@pytest.mark.parametrize("theta", [0.3, 1.7, -2.4])
def test_global_phase_leaves_all_fields_unchanged(small_grid, theta):
    psi = packet(small_grid, momenta=(-3.0, 5.0))
    rot = WaveField(small_grid, np.exp(1j * theta) * psi.values, psi.time, psi.mass)
    f0, f1 = hydro_fields(psi), hydro_fields(rot)
    assert np.allclose(f0.rho, f1.rho, rtol=0, atol=1e-14)
    assert np.allclose(f0.flux, f1.flux, rtol=0, atol=1e-14)
    assert np.ma.allclose(f0.velocity, f1.velocity, atol=1e-12)
    # Q and P are ill-conditioned near the density floor (roundoff in rho is
    # amplified by 1/rho); compare where the density is comfortably above it.
    interior = f0.rho > 1e-6 * f0.rho.max()
    qscale = np.max(np.abs(f0.qpot.data[interior]))
    assert np.max(np.abs((f0.qpot.data - f1.qpot.data)[interior])) < 1e-9 * qscale
    pscale = np.max(np.abs(f0.pressure.data[:, :, interior]))
    assert np.max(np.abs((f0.pressure.data - f1.pressure.data)[:, :, interior])) < 1e-9 * pscale


def test_density_superposition_matches_bruteforce(small_grid):
    X, Y = small_grid.meshgrid()
    a = np.exp(-((X - 0.2) ** 2 + Y**2) / (4 * 0.01)) * np.exp(2j * X)
    b = np.exp(-((X + 0.2) ** 2 + Y**2) / (4 * 0.02)) * np.exp(-3j * Y)
    psi = WaveField(small_grid, a + b, 0.0, 1.0).normalize()
    vals = psi.values
    brute = vals.real**2 + vals.imag**2
    assert np.max(np.abs(density(psi) - brute)) < 1e-12


# -- flux --------------------------------------------------------------------

def test_flux_plane_wave(small_grid):
    psi = plane_wave(small_grid, 3, 0, mass=2.0)
    k = 2 * np.pi * 3 / 2.0
    rho = density(psi)
    j = quantum_flux(psi)
    assert np.allclose(j[0], k * rho / 2.0, rtol=1e-12, atol=1e-14)
    assert np.allclose(j[1], 0.0, atol=1e-14)


def test_flux_real_state_vanishes(small_grid):
    X, Y = small_grid.meshgrid()
    vals = np.exp(-(X**2 + Y**2) / 0.05) + 0.3 * np.exp(-((X - 0.3) ** 2 + Y**2) / 0.02)
    psi = WaveField(small_grid, vals.astype(complex), 0.0, 1.0).normalize()
    assert np.max(np.abs(quantum_flux(psi))) < 1e-13


def test_flux_gaussian_with_momentum(small_grid):
    p0 = 10.0
    psi = packet(small_grid, momenta=(-p0, p0))
    rho = density(psi)
    j = quantum_flux(psi)
    assert np.max(np.abs(j[0] - rho * (-p0 / psi.mass))) < 1e-10
    assert np.max(np.abs(j[1] - rho * (p0 / psi.mass))) < 1e-10


# -- velocity ----------------------------------------------------------------

def test_velocity_plane_wave(small_grid):
    psi = plane_wave(small_grid, 2, -1, mass=3.0)
    kx = 2 * np.pi * 2 / 2.0
    ky = 2 * np.pi * (-1) / 2.0
    f = hydro_fields(psi)
    v = velocity_field(f)
    assert f.masked_count == 0
    assert np.allclose(v[0], kx / 3.0, rtol=1e-11)
    assert np.allclose(v[1], ky / 3.0, rtol=1e-11)


def test_velocity_free_gaussian_spreading(wide_grid):
    t, m, s0 = 0.7, 1.0, 0.5
    psi = free_gaussian_2d(wide_grid, t, s0, m)
    f = hydro_fields(psi)
    c = free_gaussian_velocity(t, s0, m)
    X, Y = wide_grid.meshgrid()
    sel = f.rho > 1e-4 * f.rho.max()
    assert np.max(np.abs(f.velocity[0].data[sel] - c * X[sel])) < 1e-8
    assert np.max(np.abs(f.velocity[1].data[sel] - c * Y[sel])) < 1e-8


def test_velocity_masked_at_node(wide_grid):
    X, Y = wide_grid.meshgrid()
    g = lambda c: np.exp(-((X - c) ** 2 + Y**2) / 2.0)
    psi = WaveField(wide_grid, (g(1.5) - g(-1.5)).astype(complex), 0.0, 1.0).normalize()
    f = hydro_fields(psi)
    assert f.masked_count > 0
    assert np.isfinite(f.velocity.data).all()
    assert np.isfinite(f.qpot.data).all()
    i0 = wide_grid.nx // 2  # node line x = 0 by antisymmetry
    assert f.qpot.mask[i0, wide_grid.ny // 2]


# -- quantum potential -------------------------------------------------------

def test_quantum_potential_harmonic_identity(wide_grid):
    omega = mass = 1.0
    psi = uniform_in_y(wide_grid, ho_eigenstate_1d(wide_grid.x, 0, omega, mass), mass)
    q = quantum_potential(psi)
    V = 0.5 * mass * omega**2 * wide_grid.x[:, None] ** 2
    total = q + V
    rho = density(psi)
    interior = rho > 1e-8 * rho.max()
    err = np.abs(total.data[interior & ~q.mask] - 0.5 * omega)
    assert err.max() < 1e-6


def test_quantum_potential_gaussian_center_value(small_grid):
    m = 2.0
    x_profile = np.exp(-small_grid.x**2 / (4 * SIGMA0**2))
    psi = uniform_in_y(small_grid, x_profile, m)
    q = quantum_potential(psi)
    i = small_grid.nx // 2
    expected = 1.0 / (4 * m * SIGMA0**2)
    assert abs(q[i, small_grid.ny // 2] - expected) < 1e-8 * expected


def test_quantum_potential_mean_is_internal_energy(small_grid):
    m = 1836.0
    psi = packet(small_grid, mass=m)
    q = quantum_potential(psi)
    rho = density(psi)
    mean_q = float(np.sum(np.where(q.mask, 0.0, q.data * rho)) * small_grid.cell_area)
    delta_bar = 1.0 / (4 * m * SIGMA0**2)
    assert abs(mean_q - delta_bar) < 1e-6 * delta_bar


def test_quantum_potential_plane_wave_zero(small_grid):
    psi = plane_wave(small_grid, 1, 2, mass=1.0)
    q = quantum_potential(psi)
    assert np.max(np.abs(q.data)) < 1e-9


# -- pressure tensor ----------------------------------------------------------

def test_pressure_isotropic_gaussian(wide_grid):
    m, sigma = 1.5, 0.8
    psi = free_gaussian_2d(wide_grid, 0.0, sigma, m)
    f = hydro_fields(psi)
    p = pressure_tensor(f)
    scale = 1.0 / (4 * m * sigma**2)
    interior = f.rho > 1e-6 * f.rho.max()
    for i, j, expected in [(0, 0, scale), (1, 1, scale), (0, 1, 0.0)]:
        err = np.abs(p[i, j].data[interior] - expected * f.rho[interior])
        assert err.max() < 1e-8 * (scale * f.rho.max())


def test_pressure_uniform_density_zero(small_grid):
    psi = plane_wave(small_grid, 4, 1, mass=1.0)
    p = pressure_tensor(hydro_fields(psi))
    assert np.max(np.abs(p.data)) < 1e-12


def test_pressure_symmetric(small_grid):
    psi = packet(small_grid, momenta=(2.0, -1.0))
    p = pressure_tensor(hydro_fields(psi))
    assert np.array_equal(p.data[0, 1], p.data[1, 0])


# -- continuity residual -------------------------------------------------------

def test_continuity_stationary_eigenstate(wide_grid):
    omega = mass = 1.0
    base = ho_ground_2d(wide_grid, omega, mass)
    e0 = omega  # 2D ground-state energy
    psi0 = WaveField(wide_grid, base.values * np.exp(-1j * e0 * 1.0), 1.0, mass)
    psi1 = WaveField(wide_grid, base.values * np.exp(-1j * e0 * 1.01), 1.01, mass)
    assert continuity_residual(psi0, psi1) < 1e-8


def test_continuity_second_order_in_dt(wide_grid):
    s0, m, t0 = 0.5, 1.0, 0.4
    res = []
    for dt in (0.02, 0.01):
        p0 = free_gaussian_2d(wide_grid, t0, s0, m)
        p1 = free_gaussian_2d(wide_grid, t0 + dt, s0, m)
        res.append(continuity_residual(p0, p1))
    ratio = res[0] / res[1]
    assert 3.0 < ratio < 5.0


def test_continuity_flags_corrupted_snapshot(wide_grid):
    s0, m, t0, dt = 0.5, 1.0, 0.4, 0.01
    p0 = free_gaussian_2d(wide_grid, t0, s0, m)
    p1 = free_gaussian_2d(wide_grid, t0 + dt, s0, m)
    clean = continuity_residual(p0, p1)
    X, Y = wide_grid.meshgrid()
    bad = WaveField(wide_grid, p1.values + 0.05 * np.exp(-(X**2 + Y**2)), p1.time, m)
    assert continuity_residual(p0, bad) > 1e3 * clean


def test_continuity_grid_mismatch_errors(small_grid, wide_grid):
    a = packet(small_grid)
    b = free_gaussian_2d(wide_grid, 0.01, 0.5, 1836.0)
    b.time = 0.01
    with pytest.raises(ValueError, match="grid"):
        continuity_residual(a, b)


# -- separability --------------------------------------------------------------

def test_separability_product_state(wide_grid):
    fx = np.exp(-(wide_grid.x - 0.4) ** 2 / (4 * 0.49))
    fy = np.exp(-(wide_grid.y + 0.2) ** 2 / (4 * 0.25)) * np.exp(1.3j * wide_grid.y)
    psi = wavefield_product(wide_grid, fx.astype(complex), fy, mass=1.0)
    assert q_separability_residual(psi) < 1e-8


def test_separability_entangled_state(wide_grid):
    X, Y = wide_grid.meshgrid()
    g = lambda u, c: np.exp(-((u - c) ** 2) / (4 * 0.3))
    vals = g(X, 1.0) * g(Y, -1.0) + g(X, -1.0) * g(Y, 1.0)
    psi = WaveField(wide_grid, vals.astype(complex), 0.0, 1.0).normalize()
    q = quantum_potential(psi)
    residual = q_separability_residual(psi)
    assert residual > 0.1 * np.max(np.abs(q))


def test_separability_plane_wave(small_grid):
    psi = plane_wave(small_grid, 2, 3, mass=1.0)
    assert q_separability_residual(psi) < 1e-9


# -- cross-field invariants -----------------------------------------------------

def test_flux_consistency_v_rho_equals_j(small_grid):
    psi = packet(small_grid, momenta=(-4.0, 7.0))
    f = hydro_fields(psi)
    ok = ~f.qpot.mask
    for comp in range(2):
        lhs = f.velocity[comp].data[ok] * f.rho[ok]
        assert np.max(np.abs(lhs - f.flux[comp][ok])) < 1e-12


def test_stationary_identity_2d_ground_state(wide_grid):
    omega = mass = 1.0
    psi = ho_ground_2d(wide_grid, omega, mass)
    q = quantum_potential(psi)
    X, Y = wide_grid.meshgrid()
    V = 0.5 * mass * omega**2 * (X**2 + Y**2)
    rho = density(psi)
    interior = (rho > 1e-8 * rho.max()) & ~q.mask
    assert np.max(np.abs((q.data + V)[interior] - omega)) < 1e-6


def test_euler_residual_second_order_in_dt(wide_grid):
    omega = mass = 1.0
    t0 = 0.3

    def coherent_field(t):
        fx = ho_coherent_1d(wide_grid.x, t, omega, mass, amplitude=1.0)
        fy = ho_eigenstate_1d(wide_grid.y, 0, omega, mass).astype(complex)
        vals = np.outer(fx, fy)
        return WaveField(wide_grid, vals, t, mass)

    def grad_v(X, Y):
        return mass * omega**2 * X, mass * omega**2 * Y

    res = []
    for dt in (0.02, 0.01):
        r = euler_residual(coherent_field(t0), coherent_field(t0 + dt), grad_v)
        res.append(r)
    assert res[0] / res[1] > 3.0
    assert res[1] < 1e-3
