"""Topological and variational certificates on computed configurations.

Covers the integer degree of the piecewise-linear map at surface target
points (exact signed cover counts plus a mollified chart-plane integral),
pairwise image-overlap detection as an almost-everywhere injectivity
certificate, and the discrete first-variation / spatial equilibrium
residuals of a configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import _spectral_batch, pk1_batch
from .discretization import (
    deformation_gradients,
    oriented_area_ratios,
    trial_energy,
)
from .errors import (
    BoundaryTooCloseError,
    ChartSpanFailureError,
    IrregularValueError,
)

__all__ = [
    "DegreeResult",
    "OverlapReport",
    "ResidualResult",
    "brouwer_degree",
    "boundary_winding",
    "injectivity_check",
    "first_variation_residual",
]

DEGREE_MARGIN_DEFAULT = 1e-6
OVERLAP_AREA_TOL = 1e-12


def _bump_mass_constant():
    """integral over [0, 1) of exp(-1/(1-s^2)) s ds, by substitution u = 1-s^2."""
    u = np.linspace(1e-12, 1.0, 200_001)
    return 0.5 * float(np.trapezoid(np.exp(-1.0 / u), u))


_BUMP_C0 = _bump_mass_constant()


def _bump(dist, radius):
    """Compactly supported smooth bump of unit plane integral."""
    s2 = (dist / radius) ** 2
    out = np.zeros_like(s2)
    inside = s2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s2[inside]))
    return out / (2.0 * np.pi * _BUMP_C0 * radius**2)


@dataclass(frozen=True)
class DegreeResult:
    """Degree of the configuration at one target point, by two methods."""

    target_point: np.ndarray
    degree: int
    method: str                      # method backing ``degree``
    signed_cover_count: int
    mollified_integral: float
    mollifier_radius: float
    methods_agree: bool


def _segment_distances(point, starts, ends):
    d = ends - starts
    denom = np.einsum("ij,ij->i", d, d)
    t = np.clip(
        np.einsum("ij,ij->i", point - starts, d) / np.where(denom > 0, denom, 1.0),
        0.0,
        1.0,
    )
    closest = starts + t[:, None] * d
    return np.linalg.norm(point - closest, axis=1)


def _boundary_image_distance(mesh, config, y):
    dmin = np.inf
    for loop in mesh.boundary_loops:
        idx = np.asarray(loop)
        pts = config.positions[idx]
        nxt = np.roll(pts, -1, axis=0)
        dmin = min(dmin, float(np.min(_segment_distances(y, pts, nxt))))
    return dmin


def _point_in_triangles(w, tri_uv, edge_eps):
    """Containment mask of point w in 2D triangles; raises on-edge hits."""
    a, b, c = tri_uv[:, 0], tri_uv[:, 1], tri_uv[:, 2]

    def edge(p, q):
        return (q[:, 0] - p[:, 0]) * (w[1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (
            w[0] - p[:, 0]
        )

    e0, e1, e2 = edge(a, b), edge(b, c), edge(c, a)
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    scale = np.abs(det) + 1e-300
    inside_pos = (e0 > 0) & (e1 > 0) & (e2 > 0)
    inside_neg = (e0 < 0) & (e1 < 0) & (e2 < 0)
    inside = inside_pos | inside_neg
    # A hit within rounding distance of an edge but close to the triangle
    # makes the count ill-defined for this target.
    near_edge = (
        (np.abs(e0) <= edge_eps * scale)
        | (np.abs(e1) <= edge_eps * scale)
        | (np.abs(e2) <= edge_eps * scale)
    )
    boxed = (
        (w[0] >= tri_uv[:, :, 0].min(axis=1) - edge_eps)
        & (w[0] <= tri_uv[:, :, 0].max(axis=1) + edge_eps)
        & (w[1] >= tri_uv[:, :, 1].min(axis=1) - edge_eps)
        & (w[1] <= tri_uv[:, :, 1].max(axis=1) + edge_eps)
    )
    if np.any(near_edge & boxed):
        raise IrregularValueError(
            "target point lies on an image edge; perturb the target"
        )
    return inside


def _subdivide(tris):
    """One midpoint split: (k, 3, 2) -> (4k, 3, 2), orientation preserved."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )


def brouwer_degree(
    surface,
    mesh,
    config,
    y,
    mollifier_radius=None,
    subdivisions=3,
    degree_margin=DEGREE_MARGIN_DEFAULT,
    nudge=True,
):
    """Degree of the nodal map at on-surface point y, by two methods.

    The signed cover count sums the orientation signs of the elements whose
    chart image contains the chart coordinates of y (exact for PL maps); the
    mollified integral integrates a unit-mass bump against the signed chart
    area of the image, by midpoint quadrature on subdivided elements.

    A target landing exactly on an image edge is irregular for the signed
    count; with ``nudge`` the count is taken at a deterministic offset far
    below the boundary margin (the degree is locally constant there), and
    with ``nudge=False`` such targets raise IrregularValueError.
    """
    y = np.asarray(y, dtype=float)
    bdist = _boundary_image_distance(mesh, config, y)
    if bdist < degree_margin:
        raise BoundaryTooCloseError(
            f"target point is {bdist:.3e} from the boundary image "
            f"(margin {degree_margin:.1e})"
        )
    P = config.positions[mesh.triangles]            # (m, 3, 3)
    edges = np.stack(
        [
            P[:, 1] - P[:, 0],
            P[:, 2] - P[:, 1],
            P[:, 0] - P[:, 2],
        ],
        axis=1,
    )
    edge_len = np.linalg.norm(edges, axis=2)
    diam = edge_len.max(axis=1)
    mean_edge = float(np.mean(edge_len))
    vert_dist = np.linalg.norm(P - y, axis=2).min(axis=1)

    # Bump radius: a few image edges, clamped inside the boundary clearance
    # (where the degree is constant) and the chart's validity radius.
    if mollifier_radius is None:
        radius = min(3.0 * mean_edge, 0.9 * bdist)
        chart_radius = surface.diagnostic_chart_radius
        if np.isfinite(chart_radius):
            radius = min(radius, 0.25 * chart_radius)
    else:
        radius = float(mollifier_radius)

    reach = diam + 1.6 * radius + mean_edge
    near = vert_dist <= reach
    if not np.any(near):
        return DegreeResult(
            target_point=y,
            degree=0,
            method="signed_cover_count",
            signed_cover_count=0,
            mollified_integral=0.0,
            mollifier_radius=radius,
            methods_agree=True,
        )

    chart = surface.diagnostic_chart_at(y)
    near_idx = np.nonzero(near)[0]
    ok = (
        chart.contains(P[near_idx].reshape(-1, 3)).reshape(-1, 3).all(axis=1)
    )
    if not np.all(ok):
        # Elements beyond the chart's validity contribute only if their
        # image can reach the bump support; those that provably cannot are
        # outside the local planar representative and are dropped.
        bad = near_idx[~ok]
        if np.any(vert_dist[bad] <= diam[bad] + 1.3 * radius):
            raise ChartSpanFailureError(
                "elements near the target point exceed the chart's validity "
                "radius; the mesh is too coarse for a chart-local degree here"
            )
        near_idx = near_idx[ok]
    if near_idx.size == 0:
        return DegreeResult(
            target_point=y,
            degree=0,
            method="signed_cover_count",
            signed_cover_count=0,
            mollified_integral=0.0,
            mollifier_radius=radius,
            methods_agree=True,
        )
    uv = chart.inverse_map(P[near_idx].reshape(-1, 3)).reshape(-1, 3, 2)
    w = chart.inverse_map(y)[0]

    signs = np.sign(oriented_area_ratios(mesh, config)[near_idx]).astype(int)
    local_scale = float(np.median(np.linalg.norm(uv[:, 1] - uv[:, 0], axis=1)))
    offset = local_scale * 1e-7 * np.array([np.cos(0.7), np.sin(0.7)])
    shift = np.zeros(2)
    for attempt in range(4):
        try:
            inside = _point_in_triangles(w + shift, uv, edge_eps=1e-12)
            break
        except IrregularValueError:
            if not nudge or attempt == 3:
                raise
            shift = offset * 2.0**attempt
    count = int(np.sum(signs[inside]))

    # Mollified integral over the signed chart image.
    tris = uv
    for _ in range(subdivisions):
        tris = _subdivide(tris)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    signed_area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    centroids = tris.mean(axis=1)
    dist = np.linalg.norm(centroids - w, axis=1)
    integral = float(np.sum(signed_area * _bump(dist, radius)))

    return DegreeResult(
        target_point=y,
        degree=count,
        method="signed_cover_count",
        signed_cover_count=count,
        mollified_integral=integral,
        mollifier_radius=radius,
        methods_agree=bool(abs(integral - count) < 0.5),
    )


def boundary_winding(surface, mesh, config, y):
    """Independent degree oracle: winding of the boundary image around y.

    Uses the chart at y and the boundary loops oriented with the domain on
    the left; exact for polygonal loops away from the target.
    """
    chart = surface.diagnostic_chart_at(np.asarray(y, dtype=float))
    w = chart.inverse_map(np.asarray(y, dtype=float))[0]
    total = 0.0
    for loop in mesh.boundary_loops:
        pts = chart.inverse_map(config.positions[np.asarray(loop)]) - w
        nxt = np.roll(pts, -1, axis=0)
        cross = pts[:, 0] * nxt[:, 1] - pts[:, 1] * nxt[:, 0]
        dot = np.einsum("ij,ij->i", pts, nxt)
        total += float(np.sum(np.arctan2(cross, dot)))
    return int(np.rint(total / (2.0 * np.pi)))


@dataclass
class OverlapReport:
    """Pairwise image-overlap summary over non-adjacent elements."""

    checked_pairs: int
    overlapping_pairs: int
    total_overlap_area: float
    injective: bool
    pairs: list = field(default_factory=list)   # (t1, t2, area), worst first


def _clip_polygon(subject, cx, cy, nx, ny):
    """Keep the part of polygon ``subject`` with n . (p - c) <= 0."""
    out = []
    k = len(subject)
    for i in range(k):
        p = subject[i]
        q = subject[(i + 1) % k]
        dp = nx * (p[0] - cx) + ny * (p[1] - cy)
        dq = nx * (q[0] - cx) + ny * (q[1] - cy)
        if dp <= 0:
            out.append(p)
            if dq > 0:
                t = dp / (dp - dq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
        elif dq <= 0:
            t = dp / (dp - dq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _triangle_overlap_area(t1, t2):
    """Intersection area of two 2D triangles (convex clipping)."""

    def ccw(t):
        e1 = (t[1][0] - t[0][0], t[1][1] - t[0][1])
        e2 = (t[2][0] - t[0][0], t[2][1] - t[0][1])
        return t if e1[0] * e2[1] - e1[1] * e2[0] >= 0 else (t[0], t[2], t[1])

    t1 = ccw([tuple(p) for p in t1])
    t2 = ccw([tuple(p) for p in t2])
    poly = list(t1)
    for i in range(3):
        a = t2[i]
        b = t2[(i + 1) % 3]
        # Inward normal of edge (a, b) of a CCW triangle is to its left.
        nx, ny = (b[1] - a[1]), -(b[0] - a[0])
        poly = _clip_polygon(poly, a[0], a[1], nx, ny)
        if not poly:
            return 0.0
    area = 0.0
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        area += x0 * y1 - x1 * y0
    return 0.5 * abs(area)


def injectivity_check(surface, mesh, config, area_tol=OVERLAP_AREA_TOL, max_recorded=100):
    """Image-overlap scan of all non-adjacent element pairs.

    Pairs whose axis-aligned image boxes intersect are tested exactly in a
    shared chart; a clean report (no overlap area above ``area_tol``) is the
    discrete injectivity certificate.
    """
    P = config.positions[mesh.triangles]
    m = P.shape[0]
    lo = P.min(axis=1)
    hi = P.max(axis=1)
    tris = mesh.triangles

    order = np.argsort(lo[:, 0], kind="stable")
    lo_s, hi_s = lo[order], hi[order]

    # Shared-chart strategy: one global chart for flat/graph surfaces, the
    # wrap-safe angle chart on the torus, and cached per-element tangent
    # charts otherwise (candidate pairs are ambient-close).  Overlap areas
    # are chart areas; any diffeomorphic chart preserves zero vs positive.
    global_chart = None
    if surface.kind in ("plane", "graph"):
        global_chart = surface.diagnostic_chart_at(
            surface.project(config.positions.mean(axis=0))
        )
    chart_cache = {}

    def chart_for(i):
        if global_chart is not None:
            return global_chart
        if i not in chart_cache:
            center = surface.project(P[i].mean(axis=0))
            if surface.kind == "torus":
                chart_cache[i] = surface.chart_at(center)
            else:
                chart_cache[i] = surface.diagnostic_chart_at(center)
        return chart_cache[i]

    tri_sets = [set(map(int, tris[i])) for i in range(m)]
    checked = 0
    overlaps = []
    total = 0.0
    for ii in range(m):
        i = order[ii]
        jj = ii + 1
        while jj < m and lo_s[jj, 0] <= hi_s[ii, 0]:
            j = order[jj]
            jj += 1
            if np.any(lo[j] > hi[i]) or np.any(lo[i] > hi[j]):
                continue
            if len(tri_sets[i] & tri_sets[j]) >= 2:
                continue  # edge-adjacent by construction; point contacts stay
            checked += 1
            chart = chart_for(i)
            pts = np.concatenate([P[i], P[j]])
            if not np.all(chart.contains(pts)):
                raise ChartSpanFailureError(
                    f"element pair ({int(i)}, {int(j)}) is not covered by a "
                    "single chart"
                )
            uv = chart.inverse_map(pts)
            area = _triangle_overlap_area(uv[:3], uv[3:])
            if area > area_tol:
                overlaps.append((int(i), int(j), float(area)))
                total += float(area)
    overlaps.sort(key=lambda rec: -rec[2])
    return OverlapReport(
        checked_pairs=checked,
        overlapping_pairs=len(overlaps),
        total_overlap_area=total,
        injective=total <= area_tol,
        pairs=overlaps[:max_recorded],
    )


@dataclass(frozen=True)
class ResidualResult:
    """First-variation residual of one admissible test field."""

    test_field_id: int
    direction: np.ndarray
    anchor: np.ndarray
    cutoff_radius: float
    lagrangian_residual: float
    eulerian_residual: float
    normalization: float
    admissible: bool


def _test_fields(surface, mesh, config, family_size, seed, directions=3):
    """Tangent test fields beta(y) P_T(y) v vanishing on the boundary image.

    beta is the C^1 squared-distance bump (1 - |y - y0|^2 / Rc^2)_+^2 around
    interior anchor nodes, with Rc inside the boundary-image clearance.
    """
    rng = np.random.default_rng(seed)
    interior = np.nonzero(mesh.interior_mask())[0]
    boundary_pts = config.positions[mesh.boundary_vertices]
    n_cut = max(1, -(-family_size // directions))
    anchors = []
    attempts = 0
    while len(anchors) < n_cut and attempts < 100 * n_cut:
        attempts += 1
        idx = int(rng.choice(interior))
        y0 = config.positions[idx]
        clearance = float(np.min(np.linalg.norm(boundary_pts - y0, axis=1)))
        if clearance <= 1e-12:
            continue
        anchors.append((y0, 0.95 * clearance))
    dirs = rng.standard_normal((directions, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    fields = []
    for k in range(family_size):
        v = dirs[k % directions]
        y0, rc = anchors[(k // directions) % len(anchors)]
        d2 = np.sum((config.positions - y0) ** 2, axis=1)
        beta = np.maximum(0.0, 1.0 - d2 / rc**2) ** 2
        psi = beta[:, None] * surface.tangent_project_unchecked(
            config.positions, np.broadcast_to(v, config.positions.shape)
        )
        fields.append((k, v, y0, rc, psi))
    return fields


def first_variation_residual(model, surface, mesh, config, family_size=12, seed=0):
    """Discrete stationarity residuals for a family of tangent test fields.

    The Lagrangian residual pairs the assembled energy gradient with the
    nodal test-field values (the exact derivative of the energy along the
    induced piecewise-linear variation); the Eulerian residual is the same
    elementwise sum rewritten through the spatial Cauchy stress, so the two
    agree to rounding error.  Admissibility of the variation is spot-checked
    at tau = +/- 1e-3 (all elements keep positive orientation).
    """
    F = deformation_gradients(mesh, config)
    S = pk1_batch(model, F)
    l1, l2, *_ = _spectral_batch(F)
    area_ratio = l1 * l2
    cauchy = np.einsum("tij,tkj->tik", S, F) / area_ratio[:, None, None]
    # Pseudo-inverse of F on its range: F^+ = (F^T F)^-1 F^T.
    C = np.einsum("tij,tik->tjk", F, F)
    det = C[:, 0, 0] * C[:, 1, 1] - C[:, 0, 1] * C[:, 1, 0]
    Cinv = np.empty_like(C)
    Cinv[:, 0, 0] = C[:, 1, 1] / det
    Cinv[:, 1, 1] = C[:, 0, 0] / det
    Cinv[:, 0, 1] = Cinv[:, 1, 0] = -C[:, 0, 1] / det
    Fplus = np.einsum("tjk,tik->tji", Cinv, F)      # (t, 2, 3)

    results = []
    for k, v, y0, rc, psi in _test_fields(surface, mesh, config, family_size, seed):
        psi_tri = psi[mesh.triangles]                # (t, 3verts, 3)
        Psi = np.einsum("tva,tvb->tab", psi_tri, mesh.shape_grads)
        lag = float(np.sum(mesh.ref_area * np.einsum("tab,tab->t", S, Psi)))
        D = np.einsum("tab,tbj->taj", Psi, Fplus)    # spatial gradient, (t, 3, 3)
        eul = float(
            np.sum(
                mesh.ref_area
                * area_ratio
                * np.einsum("tij,tij->t", cauchy, D)
            )
        )
        norm = float(np.linalg.norm(psi))
        admissible = True
        for tau in (1e-3, -1e-3):
            _, _, ok = trial_energy(
                model, mesh, surface, config.positions + tau * psi
            )
            admissible = admissible and ok
        results.append(
            ResidualResult(
                test_field_id=k,
                direction=v,
                anchor=y0,
                cutoff_radius=rc,
                lagrangian_residual=lag,
                eulerian_residual=eul,
                normalization=norm,
                admissible=admissible,
            )
        )
    return results
