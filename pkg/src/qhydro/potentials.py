"""Potential energy surfaces and reaction-path utilities.

Provides the standard four-Gaussian Mueller-Brown surface, the two-slit
quartic barrier, a 2D harmonic well, the free surface and a user-supplied
separable form.  All named surfaces carry analytic gradients and Hessians.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Standard Mueller-Brown parameter set (four Gaussians).
MB_A = (-200.0, -100.0, -170.0, 15.0)
MB_a = (-1.0, -1.0, -6.5, 0.7)
MB_b = (0.0, 0.0, 11.0, 0.6)
MB_c = (-10.0, -10.0, -6.5, 0.7)
MB_X0 = (1.0, 0.0, -0.5, -1.0)
MB_Y0 = (0.0, 0.5, 1.5, 1.0)

#: Approximate stationary points of the standard surface, used as Newton seeds.
#: M1 = products (deep), M2 = intermediate, M3 = reactants;
#: TS1 joins M1-M2, TS2 joins M2-M3.
MB_SEEDS = {
    "M1": (-0.558, 1.442),
    "M2": (-0.050, 0.467),
    "M3": (0.623, 0.028),
    "TS1": (-0.822, 0.624),
    "TS2": (0.212, 0.293),
}


@dataclass
class PotentialSurface:
    """A named analytic potential surface V(x, y).

    kinds: ``mueller_brown`` (optional ``scale``), ``double_slit``
    (``alpha``, ``omega``, ``v0``, ``mass``), ``harmonic2d`` (``omega``,
    ``mass``, ``center``), ``free``, ``separable_custom`` (callables
    ``fx``, ``fy`` and optional analytic derivatives).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("mueller_brown", "double_slit", "harmonic2d", "free",
                             "separable_custom"):
            raise ValueError(f"unknown potential kind: {self.kind!r}")

    # -- evaluation -----------------------------------------------------

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "free":
            return np.zeros(np.broadcast(x, y).shape)
        if self.kind == "harmonic2d":
            m, w = self.params.get("mass", 1.0), self.params["omega"]
            cx, cy = self.params.get("center", (0.0, 0.0))
            return 0.5 * m * w * w * ((x - cx) ** 2 + (y - cy) ** 2)
        if self.kind == "mueller_brown":
            s = self.params.get("scale", 1.0)
            v = 0.0
            for A, a, b, c, x0, y0 in zip(MB_A, MB_a, MB_b, MB_c, MB_X0, MB_Y0):
                dx, dy = x - x0, y - y0
                v = v + A * np.exp(a * dx * dx + b * dx * dy + c * dy * dy)
            return s * v
        if self.kind == "double_slit":
            al = self.params.get("alpha", 25.0)
            w = self.params.get("omega", 600.0)
            v0 = self.params.get("v0", 8000.0)
            m = self.params.get("mass", 1.0)
            g = v0 - 0.5 * m * w * w * y * y + (m * w * w * y * y) ** 2 / (16.0 * v0)
            return g * np.exp(-(x * x) / (al * al))
        fx, fy = self.params["fx"], self.params["fy"]
        return fx(x) + fy(y)

    def gradient(self, x, y):
        """(dV/dx, dV/dy), analytic for all named kinds."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "free":
            z = np.zeros(np.broadcast(x, y).shape)
            return z, z.copy()
        if self.kind == "harmonic2d":
            m, w = self.params.get("mass", 1.0), self.params["omega"]
            cx, cy = self.params.get("center", (0.0, 0.0))
            k = m * w * w
            return k * (x - cx) * np.ones_like(y), k * (y - cy) * np.ones_like(x)
        if self.kind == "mueller_brown":
            s = self.params.get("scale", 1.0)
            gx = 0.0
            gy = 0.0
            for A, a, b, c, x0, y0 in zip(MB_A, MB_a, MB_b, MB_c, MB_X0, MB_Y0):
                dx, dy = x - x0, y - y0
                e = A * np.exp(a * dx * dx + b * dx * dy + c * dy * dy)
                gx = gx + e * (2.0 * a * dx + b * dy)
                gy = gy + e * (b * dx + 2.0 * c * dy)
            return s * gx, s * gy
        if self.kind == "double_slit":
            al = self.params.get("alpha", 25.0)
            w = self.params.get("omega", 600.0)
            v0 = self.params.get("v0", 8000.0)
            m = self.params.get("mass", 1.0)
            env = np.exp(-(x * x) / (al * al))
            g = v0 - 0.5 * m * w * w * y * y + (m * w * w * y * y) ** 2 / (16.0 * v0)
            gp = -m * w * w * y + (m * w * w) ** 2 * y ** 3 / (4.0 * v0)
            return g * env * (-2.0 * x / (al * al)), gp * env
        fx, fy = self.params["fx"], self.params["fy"]
        dfx, dfy = self.params.get("dfx"), self.params.get("dfy")
        h = 1e-6
        gx = dfx(x) if dfx else (fx(x + h) - fx(x - h)) / (2 * h)
        gy = dfy(y) if dfy else (fy(y + h) - fy(y - h)) / (2 * h)
        return gx * np.ones_like(y), gy * np.ones_like(x)

    def hessian(self, x, y):
        """2x2 Hessian, analytic for the named kinds; shape (2, 2) + broadcast."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        if self.kind == "free":
            return np.zeros((2, 2) + shape)
        if self.kind == "harmonic2d":
            m, w = self.params.get("mass", 1.0), self.params["omega"]
            out = np.zeros((2, 2) + shape)
            out[0, 0] = out[1, 1] = m * w * w
            return out
        if self.kind == "mueller_brown":
            s = self.params.get("scale", 1.0)
            hxx = hxy = hyy = 0.0
            for A, a, b, c, x0, y0 in zip(MB_A, MB_a, MB_b, MB_c, MB_X0, MB_Y0):
                dx, dy = x - x0, y - y0
                e = A * np.exp(a * dx * dx + b * dx * dy + c * dy * dy)
                ux = 2.0 * a * dx + b * dy
                uy = b * dx + 2.0 * c * dy
                hxx = hxx + e * (2.0 * a + ux * ux)
                hxy = hxy + e * (b + ux * uy)
                hyy = hyy + e * (2.0 * c + uy * uy)
            out = np.empty((2, 2) + shape)
            out[0, 0], out[0, 1], out[1, 0], out[1, 1] = s * hxx, s * hxy, s * hxy, s * hyy
            return out
        if self.kind == "double_slit":
            al = self.params.get("alpha", 25.0)
            w = self.params.get("omega", 600.0)
            v0 = self.params.get("v0", 8000.0)
            m = self.params.get("mass", 1.0)
            env = np.exp(-(x * x) / (al * al))
            g = v0 - 0.5 * m * w * w * y * y + (m * w * w * y * y) ** 2 / (16.0 * v0)
            gp = -m * w * w * y + (m * w * w) ** 2 * y ** 3 / (4.0 * v0)
            gpp = -m * w * w + 3.0 * (m * w * w) ** 2 * y ** 2 / (4.0 * v0)
            out = np.empty((2, 2) + shape)
            out[0, 0] = g * env * (4.0 * x * x / al**4 - 2.0 / (al * al))
            out[0, 1] = out[1, 0] = gp * env * (-2.0 * x / (al * al))
            out[1, 1] = gpp * env
            return out
        fx, fy = self.params["fx"], self.params["fy"]
        d2fx, d2fy = self.params.get("d2fx"), self.params.get("d2fy")
        h = 1e-5
        hxx = d2fx(x) if d2fx else (fx(x + h) - 2 * fx(x) + fx(x - h)) / (h * h)
        hyy = d2fy(y) if d2fy else (fy(y + h) - 2 * fy(y) + fy(y - h)) / (h * h)
        out = np.zeros((2, 2) + shape)
        out[0, 0] = hxx
        out[1, 1] = hyy
        return out


def eval_potential(surface: PotentialSurface, x, y):
    """Energy of the surface at (x, y), in atomic units."""
    return surface.value(x, y)


def eval_gradient(surface: PotentialSurface, x, y):
    return surface.gradient(x, y)


def mueller_brown(scale: float = 1.0) -> PotentialSurface:
    return PotentialSurface("mueller_brown", {"scale": scale})


def double_slit(alpha: float = 25.0, omega: float = 600.0, v0: float = 8000.0,
                mass: float = 1.0) -> PotentialSurface:
    return PotentialSurface("double_slit", {"alpha": alpha, "omega": omega,
                                            "v0": v0, "mass": mass})


def harmonic2d(omega: float, mass: float = 1.0, center=(0.0, 0.0)) -> PotentialSurface:
    return PotentialSurface("harmonic2d", {"omega": omega, "mass": mass, "center": tuple(center)})


def free_surface() -> PotentialSurface:
    return PotentialSurface("free")


def separable_custom(fx: Callable, fy: Callable, dfx=None, dfy=None,
                     d2fx=None, d2fy=None) -> PotentialSurface:
    return PotentialSurface("separable_custom", {"fx": fx, "fy": fy, "dfx": dfx,
                                                 "dfy": dfy, "d2fx": d2fx, "d2fy": d2fy})


def slit_half_separation(surface: PotentialSurface) -> float:
    """y > 0 zero of the two-slit barrier profile: y_s = 2 sqrt(v0/m)/omega."""
    if surface.kind != "double_slit":
        raise ValueError("slit geometry is defined for double_slit surfaces only")
    w = surface.params.get("omega", 600.0)
    v0 = surface.params.get("v0", 8000.0)
    m = surface.params.get("mass", 1.0)
    return 2.0 * np.sqrt(v0 / m) / w


# -- reaction paths ----------------------------------------------------------

@dataclass
class ReactionPath:
    """Ordered polyline with cumulative arc length and named waypoints."""

    points: np.ndarray              # (n, 2)
    arc_length: np.ndarray          # (n,), nondecreasing, s[0] = 0
    labels: dict = field(default_factory=dict)  # name -> point index

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.arc_length = np.asarray(self.arc_length, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("points must have shape (n, 2)")
        if self.arc_length.shape != (self.points.shape[0],):
            raise ValueError("arc_length length mismatch")


def arc_length(points) -> np.ndarray:
    """Cumulative polyline length: s_i = sum of segment lengths up to i."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two points")
    seg = np.sqrt(np.sum(np.diff(pts, axis=0) ** 2, axis=1))
    return np.concatenate([[0.0], np.cumsum(seg)])


def _descend(surface: PotentialSurface, r0: np.ndarray, step: float,
             grad_tol: float, max_steps: int, record_spacing: float,
             bounds=None):
    """Euler gradient flow r <- r - h grad(V) until the gradient vanishes
    (or the path leaves ``bounds``, when given)."""
    r = np.array(r0, dtype=float)
    pts = [r.copy()]
    last = r.copy()
    for _ in range(max_steps):
        gx, gy = surface.gradient(r[0], r[1])
        g = np.array([float(gx), float(gy)])
        gn = np.hypot(g[0], g[1])
        if gn < grad_tol:
            if np.any(r != pts[-1]):
                pts.append(r.copy())
            return np.array(pts)
        r -= step * g
        if bounds is not None:
            (xlo, xhi), (ylo, yhi) = bounds
            if not (xlo <= r[0] <= xhi and ylo <= r[1] <= yhi):
                pts.append(r.copy())
                return np.array(pts)
        if np.hypot(*(r - last)) >= record_spacing:
            pts.append(r.copy())
            last = r.copy()
    raise RuntimeError(
        "steepest-descent did not converge within max_steps; a smaller step "
        "may be needed for stiff wells")


def steepest_descent_path(surface: PotentialSurface, start, step: float = 1e-4,
                          grad_tol: float = 1e-6, saddle_grad_tol: float = 1e-4,
                          seed_offset: float = 1e-3, max_steps: int = 2_000_000,
                          record_spacing: float = 1e-3, bounds=None) -> ReactionPath:
    """Two steepest-descent branches from an index-1 saddle down to the minima.

    The start point must lie within ``saddle_grad_tol`` of a stationary
    point whose Hessian has exactly one negative eigenvalue; the branches
    are seeded at +/- ``seed_offset`` along the unstable eigenvector and
    followed by explicit Euler gradient flow with step ``step`` until the
    gradient norm drops below ``grad_tol``.  ``bounds`` truncates branches
    that descend without bound (no minimum inside the window).
    """
    start = np.asarray(start, dtype=float)
    gx, gy = surface.gradient(start[0], start[1])
    if np.hypot(float(gx), float(gy)) > saddle_grad_tol:
        raise ValueError("start is not a stationary point (gradient too large)")
    hess = surface.hessian(start[0], start[1]).reshape(2, 2)
    evals, evecs = np.linalg.eigh(hess)
    if not (evals[0] < 0 < evals[1]):
        raise ValueError("not a saddle: Hessian index is not 1")
    u = evecs[:, 0]

    minus = _descend(surface, start - seed_offset * u, step, grad_tol, max_steps,
                     record_spacing, bounds)
    plus = _descend(surface, start + seed_offset * u, step, grad_tol, max_steps,
                    record_spacing, bounds)
    pts = np.vstack([minus[::-1], start[np.newaxis, :], plus])
    labels = {"saddle": len(minus)}
    return ReactionPath(pts, arc_length(pts), labels)


def newton_refine(surface: PotentialSurface, seed, steps: int = 40) -> np.ndarray:
    """Newton iteration to a stationary point from a nearby seed."""
    r = np.array(seed, dtype=float)
    for _ in range(steps):
        gx, gy = surface.gradient(r[0], r[1])
        h = surface.hessian(r[0], r[1]).reshape(2, 2)
        dr = np.linalg.solve(h, np.array([float(gx), float(gy)]))
        r -= dr
        if np.hypot(*dr) < 1e-14:
            break
    return r


def mueller_brown_stationary_points(surface: PotentialSurface | None = None) -> dict:
    """Refined minima and saddles of the Mueller-Brown surface.

    Returns name -> (x, y) for M1, M2, M3 (minima ordered products,
    intermediate, reactants) and TS1, TS2 (saddles).
    """
    surf = surface or mueller_brown()
    if surf.kind != "mueller_brown":
        raise ValueError("expected a mueller_brown surface")
    return {name: newton_refine(surf, seed) for name, seed in MB_SEEDS.items()}


def mueller_brown_reaction_path(surface: PotentialSurface | None = None,
                                step: float = 1e-4) -> ReactionPath:
    """Full reaction path M1 - TS1 - M2 - TS2 - M3 of the Mueller-Brown surface."""
    surf = surface or mueller_brown()
    pts = mueller_brown_stationary_points(surf)
    left = steepest_descent_path(surf, pts["TS1"], step=step)
    right = steepest_descent_path(surf, pts["TS2"], step=step)

    def oriented(path: ReactionPath, from_pt):
        ends = path.points[[0, -1]]
        d0 = np.hypot(*(ends[0] - from_pt))
        d1 = np.hypot(*(ends[1] - from_pt))
        return path.points if d0 < d1 else path.points[::-1]

    a = oriented(left, pts["M1"])    # M1 .. TS1 .. M2
    b = oriented(right, pts["M2"])   # M2 .. TS2 .. M3
    allpts = np.vstack([a, b])
    s = arc_length(allpts)
    labels = {
        "M1": 0,
        "TS1": int(np.argmin(np.hypot(*(allpts - pts["TS1"]).T))),
        "M2": int(np.argmin(np.hypot(*(allpts - pts["M2"]).T))),
        "TS2": int(np.argmin(np.hypot(*(allpts - pts["TS2"]).T))),
        "M3": len(allpts) - 1,
    }
    return ReactionPath(allpts, s, labels)
