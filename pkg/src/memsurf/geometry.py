"""Analytic target surfaces with oriented normals, projections, and charts.

Every surface is a smooth oriented 2-manifold embedded in R^3, described in
closed form (plane, sphere, torus, ellipsoid, polynomial height graph).  All
point-valued operations accept either a single 3-vector or an (n, 3) batch
and are pure, so surfaces are safe to share between threads.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    AmbiguousProjectionError,
    NoConvergenceError,
    OffSurfaceError,
)

__all__ = [
    "Surface",
    "Plane",
    "Sphere",
    "Torus",
    "Ellipsoid",
    "GraphSurface",
    "Chart",
    "make_surface",
]


def _as_points(p):
    """Return (points, was_single) with points shaped (n, 3)."""
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        return p[None, :], True
    return p, False


def _unpack(values, single):
    return values[0] if single else values


def _orthonormal_frame(n):
    """Deterministic right-handed frame (t1, t2, n) for a unit vector n."""
    n = np.asarray(n, dtype=float)
    axis = np.zeros(3)
    axis[np.argmin(np.abs(n))] = 1.0
    t1 = axis - np.dot(axis, n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


class Surface:
    """Base class: oriented surface with closest-point projection.

    Subclasses provide the implicit description and closed-form (or Newton)
    projections.  ``orientation_sign`` selects which of the two continuous
    unit-normal fields is used everywhere.
    """

    kind = "abstract"

    def __init__(self, orientation_sign=1):
        if orientation_sign not in (1, -1):
            raise ValueError("orientation_sign must be +1 or -1")
        self.orientation_sign = int(orientation_sign)

    # -- implicit description ------------------------------------------------
    def implicit(self, p):
        """Level-set value, zero on the surface."""
        raise NotImplementedError

    def implicit_grad(self, p):
        """Gradient of the level-set function (not normalized)."""
        raise NotImplementedError

    # -- scale-derived tolerances --------------------------------------------
    @property
    def curvature_radius(self):
        """Smallest principal radius of curvature (scale for tolerances)."""
        raise NotImplementedError

    @property
    def on_surface_tol(self):
        return 1e-9 * self.curvature_radius

    @property
    def medial_tol(self):
        return 1e-3 * self.curvature_radius

    @property
    def normal_lipschitz(self):
        """Upper bound for |n(y1)-n(y2)| / |y1-y2| at close range."""
        return 1.0 / self.curvature_radius

    # -- core operations -----------------------------------------------------
    def distance(self, p):
        """Approximate unsigned distance to the surface."""
        p, single = _as_points(p)
        g = self.implicit(p)
        dg = np.linalg.norm(self.implicit_grad(p), axis=-1)
        return _unpack(np.abs(g) / np.maximum(dg, 1e-300), single)

    def _require_on_surface(self, y):
        d = np.atleast_1d(self.distance(y))
        if np.any(d > self.on_surface_tol):
            raise OffSurfaceError(
                f"point at distance {float(np.max(d)):.3e} from {self.kind} "
                f"surface exceeds tolerance {self.on_surface_tol:.3e}"
            )

    def normal(self, y):
        """Oriented unit normal at an on-surface point."""
        self._require_on_surface(y)
        return self.normal_unchecked(y)

    def normal_unchecked(self, p):
        """Oriented unit normal field extended to near-surface points."""
        p, single = _as_points(p)
        g = self.implicit_grad(p)
        n = g / np.linalg.norm(g, axis=-1, keepdims=True)
        return _unpack(self.orientation_sign * n, single)

    def project(self, p):
        """Closest point on the surface (raises near the medial axis)."""
        raise NotImplementedError

    def tangent_project(self, y, v):
        """Project ambient vectors onto the tangent plane at on-surface y."""
        self._require_on_surface(y)
        return self.tangent_project_unchecked(y, v)

    def tangent_project_unchecked(self, y, v):
        y, single = _as_points(y)
        v, _ = _as_points(v)
        n = np.atleast_2d(self.normal_unchecked(y))
        out = v - np.sum(v * n, axis=-1, keepdims=True) * n
        return _unpack(out, single)

    # -- charts ----------------------------------------------------------------
    def chart_at(self, y):
        """Family chart (planar / polar / toroidal / graph) containing y."""
        raise NotImplementedError

    def diagnostic_chart_at(self, y):
        """Chart regular at its center, used by degree/overlap diagnostics."""
        self._require_on_surface(y)
        y = np.asarray(y, dtype=float)
        return TangentGraphChart(self, y)

    @property
    def diagnostic_chart_radius(self):
        """Chord-distance validity radius of diagnostic charts."""
        raise NotImplementedError


class Plane(Surface):
    """Affine plane {p : p . normal_dir = offset}."""

    kind = "plane"

    def __init__(self, normal_dir=(0.0, 0.0, 1.0), offset=0.0, orientation_sign=1):
        super().__init__(orientation_sign)
        n = np.asarray(normal_dir, dtype=float)
        self._n = n / np.linalg.norm(n)
        self.offset = float(offset)
        self.origin = self.offset * self._n
        self.t1, self.t2 = _orthonormal_frame(self._n)

    def implicit(self, p):
        p, single = _as_points(p)
        return _unpack(p @ self._n - self.offset, single)

    def implicit_grad(self, p):
        p, single = _as_points(p)
        return _unpack(np.broadcast_to(self._n, p.shape).copy(), single)

    @property
    def curvature_radius(self):
        return 1.0

    @property
    def normal_lipschitz(self):
        return 0.0

    def project(self, p):
        p, single = _as_points(p)
        h = p @ self._n - self.offset
        return _unpack(p - h[:, None] * self._n, single)

    def embed(self, x):
        """Map reference coordinates (n, 2) into the plane."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.origin + x[:, :1] * self.t1 + x[:, 1:2] * self.t2

    def chart_at(self, y):
        self._require_on_surface(y)
        return PlanarChart(self, np.asarray(y, dtype=float))

    def diagnostic_chart_at(self, y):
        self._require_on_surface(y)
        return PlanarChart(self, np.asarray(y, dtype=float))

    @property
    def diagnostic_chart_radius(self):
        return np.inf


class Sphere(Surface):
    """Sphere of radius R centered at the origin."""

    kind = "sphere"

    def __init__(self, radius=1.0, orientation_sign=1):
        super().__init__(orientation_sign)
        if radius <= 0:
            raise ValueError("sphere radius must be positive")
        self.radius = float(radius)

    def implicit(self, p):
        p, single = _as_points(p)
        return _unpack(np.linalg.norm(p, axis=-1) - self.radius, single)

    def implicit_grad(self, p):
        p, single = _as_points(p)
        r = np.linalg.norm(p, axis=-1, keepdims=True)
        return _unpack(p / np.maximum(r, 1e-300), single)

    @property
    def curvature_radius(self):
        return self.radius

    def project(self, p):
        p, single = _as_points(p)
        r = np.linalg.norm(p, axis=-1)
        if np.any(r < self.medial_tol):
            raise AmbiguousProjectionError("projection queried at the sphere center")
        return _unpack(self.radius * p / r[:, None], single)

    def chart_at(self, y):
        self._require_on_surface(y)
        return SpherePolarChart(self, np.asarray(y, dtype=float))

    @property
    def diagnostic_chart_radius(self):
        return 0.9 * self.radius


class Torus(Surface):
    """Torus around the z axis: ring radius R, tube radius r (R > r > 0)."""

    kind = "torus"

    def __init__(self, major_radius=2.0, minor_radius=0.5, orientation_sign=1):
        super().__init__(orientation_sign)
        if not (major_radius > minor_radius > 0):
            raise ValueError("torus requires major_radius > minor_radius > 0")
        self.major_radius = float(major_radius)
        self.minor_radius = float(minor_radius)

    def _ring_point(self, p):
        rho = np.linalg.norm(p[:, :2], axis=-1)
        q = np.zeros_like(p)
        safe = np.maximum(rho, 1e-300)
        q[:, 0] = self.major_radius * p[:, 0] / safe
        q[:, 1] = self.major_radius * p[:, 1] / safe
        return q, rho

    def implicit(self, p):
        p, single = _as_points(p)
        q, _ = self._ring_point(p)
        return _unpack(np.linalg.norm(p - q, axis=-1) - self.minor_radius, single)

    def implicit_grad(self, p):
        p, single = _as_points(p)
        q, _ = self._ring_point(p)
        d = p - q
        nd = np.linalg.norm(d, axis=-1, keepdims=True)
        return _unpack(d / np.maximum(nd, 1e-300), single)

    @property
    def curvature_radius(self):
        return self.minor_radius

    def project(self, p):
        p, single = _as_points(p)
        q, rho = self._ring_point(p)
        d = p - q
        nd = np.linalg.norm(d, axis=-1)
        if np.any(rho < self.medial_tol) or np.any(nd < self.medial_tol):
            raise AmbiguousProjectionError(
                "projection queried on the torus axis or core circle"
            )
        return _unpack(q + self.minor_radius * d / nd[:, None], single)

    def angles(self, y):
        """(tube angle psi, azimuth theta) of on-surface points."""
        y, single = _as_points(y)
        theta = np.arctan2(y[:, 1], y[:, 0])
        rho = np.linalg.norm(y[:, :2], axis=-1)
        psi = np.arctan2(y[:, 2], rho - self.major_radius)
        out = np.stack([psi, theta], axis=-1)
        return _unpack(out, single)

    def from_angles(self, psi, theta):
        psi = np.asarray(psi, dtype=float)
        theta = np.asarray(theta, dtype=float)
        w = self.major_radius + self.minor_radius * np.cos(psi)
        return np.stack(
            [w * np.cos(theta), w * np.sin(theta), self.minor_radius * np.sin(psi)],
            axis=-1,
        )

    def chart_at(self, y):
        self._require_on_surface(y)
        return TorusChart(self, np.asarray(y, dtype=float))

    @property
    def diagnostic_chart_radius(self):
        return 0.75 * self.minor_radius


class Ellipsoid(Surface):
    """Axis-aligned ellipsoid sum((p_i/a_i)^2) = 1."""

    kind = "ellipsoid"

    def __init__(self, semi_axes=(1.0, 1.0, 1.0), orientation_sign=1):
        super().__init__(orientation_sign)
        axes = np.asarray(semi_axes, dtype=float)
        if axes.shape != (3,) or np.any(axes <= 0):
            raise ValueError("semi_axes must be three positive numbers")
        self.semi_axes = axes

    def implicit(self, p):
        p, single = _as_points(p)
        return _unpack(np.sum((p / self.semi_axes) ** 2, axis=-1) - 1.0, single)

    def implicit_grad(self, p):
        p, single = _as_points(p)
        return _unpack(2.0 * p / self.semi_axes**2, single)

    @property
    def curvature_radius(self):
        return float(np.min(self.semi_axes) ** 2 / np.max(self.semi_axes))

    @property
    def normal_lipschitz(self):
        return 1.0 / self.curvature_radius

    def project(self, p, tol=1e-12, max_iter=50):
        """Newton solve of the closest-point condition y_i = p_i a_i^2/(a_i^2+mu).

        The root mu in (-min(a_i^2), inf) is unique and yields the nearest
        point for queries away from the interior medial region.
        """
        p, single = _as_points(p)
        if np.any(np.linalg.norm(p, axis=-1) < self.medial_tol):
            raise AmbiguousProjectionError(
                "projection queried near the ellipsoid center"
            )
        a2 = self.semi_axes**2
        lo = np.full(p.shape[0], -a2.min() * (1.0 - 1e-12))
        # h is decreasing in mu; h(hi) < 0 needs hi > |p| a_max^2.
        hi = (np.linalg.norm(p, axis=-1) + 1.0) * a2.max()
        mu = np.where(np.asarray(self.implicit(p)) >= 0, 0.0, 0.5 * lo)

        def h_and_dh(mu):
            den = a2[None, :] + mu[:, None]
            h = np.sum((p**2) * a2[None, :] / den**2, axis=-1) - 1.0
            dh = -2.0 * np.sum((p**2) * a2[None, :] / den**3, axis=-1)
            return h, dh

        for _ in range(max_iter):
            h, dh = h_and_dh(mu)
            converged = np.abs(h) < tol
            if np.all(converged):
                break
            lo = np.where(h > 0, np.maximum(lo, mu), lo)
            hi = np.where(h < 0, np.minimum(hi, mu), hi)
            step = h / np.where(np.abs(dh) > 1e-300, dh, 1.0)
            mu_new = mu - step
            bad = (mu_new <= lo) | (mu_new >= hi) | ~np.isfinite(mu_new)
            mu_new = np.where(bad, 0.5 * (lo + hi), mu_new)
            mu = np.where(converged, mu, mu_new)
        else:
            h, _ = h_and_dh(mu)
            if np.any(np.abs(h) > np.sqrt(tol)):
                raise NoConvergenceError("ellipsoid projection did not converge")
        y = p * a2[None, :] / (a2[None, :] + mu[:, None])
        return _unpack(y, single)

    def chart_at(self, y):
        self._require_on_surface(y)
        return TangentGraphChart(self, np.asarray(y, dtype=float))

    @property
    def diagnostic_chart_radius(self):
        return 0.6 * self.curvature_radius


def _poly_dx(c):
    if c.shape[0] == 1:
        return np.zeros((1, 1))
    return c[1:, :] * np.arange(1, c.shape[0])[:, None]


def _poly_dy(c):
    if c.shape[1] == 1:
        return np.zeros((1, 1))
    return c[:, 1:] * np.arange(1, c.shape[1])[None, :]


class GraphSurface(Surface):
    """Height graph z = sum_ij c[i][j] x^i y^j over the whole (x, y) plane."""

    kind = "graph"

    def __init__(self, coeffs=((0.0,),), orientation_sign=1, extent=2.0):
        super().__init__(orientation_sign)
        self.coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        self.extent = float(extent)
        self._cx = _poly_dx(self.coeffs)
        self._cy = _poly_dy(self.coeffs)
        self._cxx = _poly_dx(self._cx)
        self._cxy = _poly_dy(self._cx)
        self._cyy = _poly_dy(self._cy)

    def height(self, x, y):
        return np.polynomial.polynomial.polyval2d(x, y, self.coeffs)

    def height_grad(self, x, y):
        hx = np.polynomial.polynomial.polyval2d(x, y, self._cx)
        hy = np.polynomial.polynomial.polyval2d(x, y, self._cy)
        return hx, hy

    def height_hess(self, x, y):
        hxx = np.polynomial.polynomial.polyval2d(x, y, self._cxx)
        hxy = np.polynomial.polynomial.polyval2d(x, y, self._cxy)
        hyy = np.polynomial.polynomial.polyval2d(x, y, self._cyy)
        return hxx, hxy, hyy

    def implicit(self, p):
        p, single = _as_points(p)
        return _unpack(p[:, 2] - self.height(p[:, 0], p[:, 1]), single)

    def implicit_grad(self, p):
        p, single = _as_points(p)
        hx, hy = self.height_grad(p[:, 0], p[:, 1])
        g = np.stack([-hx, -hy, np.ones_like(hx)], axis=-1)
        return _unpack(g, single)

    @property
    def curvature_radius(self):
        # Sampled curvature bound over the working box [-extent, extent]^2.
        s = np.linspace(-self.extent, self.extent, 41)
        X, Y = np.meshgrid(s, s)
        hxx, hxy, hyy = self.height_hess(X, Y)
        kappa = np.abs(hxx) + np.abs(hyy) + 2 * np.abs(hxy)
        return float(min(1.0, 1.0 / max(np.max(kappa), 1e-6)))

    @property
    def normal_lipschitz(self):
        return 2.0 / self.curvature_radius

    def _sqdist_grad(self, uv, p):
        """Squared distance to p (halved), its gradient and Hessian in (u, v)."""
        z = self.height(uv[:, 0], uv[:, 1])
        hx, hy = self.height_grad(uv[:, 0], uv[:, 1])
        dz = z - p[:, 2]
        du = uv[:, 0] - p[:, 0]
        dv = uv[:, 1] - p[:, 1]
        d2 = 0.5 * (du**2 + dv**2 + dz**2)
        ru = du + dz * hx
        rv = dv + dz * hy
        hxx, hxy, hyy = self.height_hess(uv[:, 0], uv[:, 1])
        j11 = 1.0 + hx * hx + dz * hxx
        j12 = hx * hy + dz * hxy
        j22 = 1.0 + hy * hy + dz * hyy
        return d2, ru, rv, j11, j12, j22

    def project(self, p, tol=1e-12, max_iter=50):
        """Damped Newton on the stationarity condition of |y(u, v) - p|^2."""
        p, single = _as_points(p)
        uv = p[:, :2].copy()
        scale = max(1.0, self.extent)
        for _ in range(max_iter):
            d2, ru, rv, j11, j12, j22 = self._sqdist_grad(uv, p)
            res = np.hypot(ru, rv)
            if np.all(res < tol * scale):
                break
            # Newton direction; fall back to gradient when H is not SPD.
            det = j11 * j22 - j12 * j12
            spd = (det > 1e-300) & (j11 > 0)
            du = np.where(spd, (j22 * ru - j12 * rv) / np.where(spd, det, 1.0), ru)
            dv = np.where(spd, (j11 * rv - j12 * ru) / np.where(spd, det, 1.0), rv)
            # Backtrack on the squared distance far from the solution; close
            # to it the distance hits the float floor, so take full steps.
            step = np.ones(uv.shape[0])
            active = res >= tol * scale
            guarded = active & (res >= 1e-6 * scale)
            for _ in range(40):
                trial = uv - step[:, None] * np.column_stack([du, dv])
                d2_new = self._sqdist_grad(trial, p)[0]
                worse = guarded & (d2_new > d2)
                if not np.any(worse):
                    break
                step = np.where(worse, 0.5 * step, step)
            uv = np.where(active[:, None], uv - step[:, None] * np.column_stack([du, dv]), uv)
        else:
            raise NoConvergenceError("graph projection did not converge")
        z = self.height(uv[:, 0], uv[:, 1])
        return _unpack(np.column_stack([uv, z]), single)

    def chart_at(self, y):
        self._require_on_surface(y)
        return GraphHeightChart(self, np.asarray(y, dtype=float))

    def diagnostic_chart_at(self, y):
        return self.chart_at(y)

    @property
    def diagnostic_chart_radius(self):
        return 4.0 * self.extent


# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------


class Chart:
    """Local parameterization (y^1, y^2) -> surface with metric data.

    ``param_map`` and ``inverse_map`` are mutually inverse on the covered
    patch; ``covariant_basis`` returns the tangent vectors d(param)/d(y^a),
    from which the metric, its determinant and the dual basis follow.
    """

    def __init__(self, surface, center):
        self.surface = surface
        self.center = np.asarray(center, dtype=float)
        self._orient()

    def _orient(self):
        """Flip the second coordinate if the chart disagrees with n."""
        self._sign_v = 1.0
        probe = np.array([[1e-4, 0.7e-4]]) * max(
            1.0, getattr(self.surface, "curvature_radius", 1.0)
        )
        a1, a2 = self.covariant_basis(probe)
        y = self.param_map(probe)
        n = np.atleast_2d(self.surface.normal_unchecked(y))
        triple = np.sum(n * np.cross(a1, a2), axis=-1)
        if triple[0] < 0:
            self._sign_v = -1.0

    def _uv(self, uv):
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        return np.column_stack([uv[:, 0], self._sign_v * uv[:, 1]])

    def param_map(self, uv):
        raise NotImplementedError

    def inverse_map(self, points):
        raise NotImplementedError

    def covariant_basis(self, uv):
        raise NotImplementedError

    def contains(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.ones(points.shape[0], dtype=bool)

    def metric(self, uv):
        a1, a2 = self.covariant_basis(uv)
        g = np.empty(a1.shape[:-1] + (2, 2))
        g[..., 0, 0] = np.sum(a1 * a1, axis=-1)
        g[..., 0, 1] = g[..., 1, 0] = np.sum(a1 * a2, axis=-1)
        g[..., 1, 1] = np.sum(a2 * a2, axis=-1)
        return g

    def sqrt_a(self, uv):
        g = self.metric(uv)
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
        return np.sqrt(np.maximum(det, 0.0))

    def contravariant_basis(self, uv):
        a1, a2 = self.covariant_basis(uv)
        g = self.metric(uv)
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
        inv00 = g[..., 1, 1] / det
        inv01 = -g[..., 0, 1] / det
        inv11 = g[..., 0, 0] / det
        up1 = inv00[..., None] * a1 + inv01[..., None] * a2
        up2 = inv01[..., None] * a1 + inv11[..., None] * a2
        return up1, up2


class PlanarChart(Chart):
    """Identity chart of a plane, centered at an on-plane point."""

    def param_map(self, uv):
        uv = self._uv(uv)
        s = self.surface
        return self.center + uv[:, :1] * s.t1 + uv[:, 1:2] * s.t2

    def inverse_map(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        d = points - self.center
        uv = np.column_stack([d @ self.surface.t1, d @ self.surface.t2])
        return self._uv(uv)

    def covariant_basis(self, uv):
        uv = self._uv(uv)
        n = uv.shape[0]
        a1 = np.broadcast_to(self.surface.t1, (n, 3)).copy()
        a2 = self._sign_v * np.broadcast_to(self.surface.t2, (n, 3)).copy()
        return a1, a2


class SpherePolarChart(Chart):
    """Polar cap chart: (colatitude, azimuth) about the pole at ``center``."""

    def __init__(self, surface, center):
        R = surface.radius
        self._e3 = center / np.linalg.norm(center)
        self._t1, self._t2 = _orthonormal_frame(self._e3)
        super().__init__(surface, center)

    def param_map(self, uv):
        uv = self._uv(uv)
        R = self.surface.radius
        th, ph = uv[:, 0], uv[:, 1]
        w = (
            np.sin(th)[:, None]
            * (np.cos(ph)[:, None] * self._t1 + np.sin(ph)[:, None] * self._t2)
            + np.cos(th)[:, None] * self._e3
        )
        return R * w

    def inverse_map(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        R = self.surface.radius
        w = points / R
        w3 = np.clip(w @ self._e3, -1.0, 1.0)
        th = np.arccos(w3)
        ph = np.arctan2(w @ self._t2, w @ self._t1)
        return self._uv(np.column_stack([th, ph]))

    def covariant_basis(self, uv):
        uv = self._uv(uv)
        R = self.surface.radius
        th, ph = uv[:, 0], uv[:, 1]
        ct, st = np.cos(th)[:, None], np.sin(th)[:, None]
        cp, sp = np.cos(ph)[:, None], np.sin(ph)[:, None]
        a1 = R * (ct * (cp * self._t1 + sp * self._t2) - st * self._e3)
        a2 = self._sign_v * R * st * (-sp * self._t1 + cp * self._t2)
        return a1, a2

    def contains(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        w3 = (points / self.surface.radius) @ self._e3
        return w3 > -0.95


class TorusChart(Chart):
    """Angle-offset chart (tube angle, azimuth) about ``center``."""

    def __init__(self, surface, center):
        self._psi0, self._theta0 = surface.angles(center)
        super().__init__(surface, center)

    def param_map(self, uv):
        uv = self._uv(uv)
        return self.surface.from_angles(self._psi0 + uv[:, 0], self._theta0 + uv[:, 1])

    def inverse_map(self, points):
        ang = np.atleast_2d(self.surface.angles(points))
        du = np.mod(ang[:, 0] - self._psi0 + np.pi, 2 * np.pi) - np.pi
        dv = np.mod(ang[:, 1] - self._theta0 + np.pi, 2 * np.pi) - np.pi
        return self._uv(np.column_stack([du, dv]))

    def covariant_basis(self, uv):
        uv = self._uv(uv)
        s = self.surface
        psi = self._psi0 + uv[:, 0]
        theta = self._theta0 + uv[:, 1]
        r, R = s.minor_radius, s.major_radius
        cps, sps = np.cos(psi), np.sin(psi)
        cth, sth = np.cos(theta), np.sin(theta)
        a1 = np.stack([-r * sps * cth, -r * sps * sth, r * cps], axis=-1)
        w = R + r * cps
        a2 = self._sign_v * np.stack([-w * sth, w * cth, np.zeros_like(w)], axis=-1)
        return a1, a2

    def contains(self, points):
        uv = self.inverse_map(points)
        return (np.abs(uv[:, 0]) < 0.9 * np.pi) & (np.abs(uv[:, 1]) < 0.9 * np.pi)


class GraphHeightChart(Chart):
    """Global (x, y) chart of a height graph, offset to a center point."""

    def param_map(self, uv):
        uv = self._uv(uv)
        x = self.center[0] + uv[:, 0]
        y = self.center[1] + uv[:, 1]
        return np.column_stack([x, y, self.surface.height(x, y)])

    def inverse_map(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self._uv(points[:, :2] - self.center[:2])

    def covariant_basis(self, uv):
        uv = self._uv(uv)
        x = self.center[0] + uv[:, 0]
        y = self.center[1] + uv[:, 1]
        hx, hy = self.surface.height_grad(x, y)
        one = np.ones_like(hx)
        zero = np.zeros_like(hx)
        a1 = np.stack([one, zero, hx], axis=-1)
        a2 = self._sign_v * np.stack([zero, one, hy], axis=-1)
        return a1, a2


class TangentGraphChart(Chart):
    """Monge chart over the tangent plane at ``center``.

    param(u, v) solves the implicit equation along the center normal, so the
    chart is regular at its center for any of the analytic surfaces.
    """

    def __init__(self, surface, center, tol=1e-13, max_iter=60):
        self._n0 = surface.normal_unchecked(center)
        self._t1, self._t2 = _orthonormal_frame(self._n0)
        self._tol = tol * max(1.0, surface.curvature_radius)
        self._max_iter = max_iter
        super().__init__(surface, center)

    def _height(self, uv):
        base = self.center + uv[:, :1] * self._t1 + uv[:, 1:2] * self._t2
        h = np.zeros(uv.shape[0])
        for _ in range(self._max_iter):
            z = base + h[:, None] * self._n0
            g = np.atleast_1d(self.surface.implicit(z))
            dg = np.atleast_2d(self.surface.implicit_grad(z)) @ self._n0
            dg = np.where(np.abs(dg) < 1e-300, 1.0, dg)
            step = g / dg
            h -= step
            if np.all(np.abs(g) < self._tol):
                break
        else:
            raise NoConvergenceError("tangent chart height solve did not converge")
        return base, h

    def param_map(self, uv):
        uv = self._uv(uv)
        base, h = self._height(uv)
        return base + h[:, None] * self._n0

    def inverse_map(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        d = points - self.center
        return self._uv(np.column_stack([d @ self._t1, d @ self._t2]))

    def covariant_basis(self, uv):
        uv = self._uv(uv)
        base, h = self._height(uv)
        z = base + h[:, None] * self._n0
        grad = np.atleast_2d(self.surface.implicit_grad(z))
        gn = grad @ self._n0
        gn = np.where(np.abs(gn) < 1e-300, 1.0, gn)
        h1 = -(grad @ self._t1) / gn
        h2 = -(grad @ self._t2) / gn
        a1 = self._t1 + h1[:, None] * self._n0
        a2 = self._sign_v * (self._t2 + h2[:, None] * self._n0)
        return a1, a2

    def contains(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        chord = np.linalg.norm(points - self.center, axis=-1)
        return chord < self.surface.diagnostic_chart_radius


_SURFACE_KINDS = {
    "plane": Plane,
    "sphere": Sphere,
    "torus": Torus,
    "ellipsoid": Ellipsoid,
    "graph": GraphSurface,
}


def make_surface(kind, **params):
    """Construct a surface by family name (used by the run configuration)."""
    try:
        cls = _SURFACE_KINDS[kind]
    except KeyError:
        raise ValueError(
            f"unknown surface kind {kind!r}; expected one of {sorted(_SURFACE_KINDS)}"
        ) from None
    return cls(**params)
