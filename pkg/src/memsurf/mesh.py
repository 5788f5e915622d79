"""Reference triangulations of the planar domain and mesh file I/O.

Meshes are conforming triangulations with consistently counterclockwise
triangles.  Files use a minimal Wavefront-style text format: ``v x y z``
vertex records and ``f i j k`` one-based face records, ASCII with LF line
endings; lines starting with ``#`` are comments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateElementError

__all__ = ["TriMesh", "build_mesh", "save_mesh", "load_mesh"]

AREA_TOL = 1e-14


@dataclass(frozen=True)
class TriMesh:
    """Triangulated reference domain with per-element shape data.

    ``shape_grads[t, i]`` is the constant gradient of the linear shape
    function of local vertex i on triangle t, so the gradient of a nodal
    field y is sum_i y_i (x) shape_grads[t, i].
    """

    vertices: np.ndarray          # (n, 2)
    triangles: np.ndarray         # (m, 3) int, counterclockwise
    boundary_vertices: np.ndarray  # sorted int indices
    ref_area: np.ndarray          # (m,)
    shape_grads: np.ndarray       # (m, 3, 2)
    boundary_loops: tuple = field(default=(), compare=False)

    @classmethod
    def from_arrays(cls, vertices, triangles):
        vertices = np.asarray(vertices, dtype=float)
        triangles = np.asarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError("vertices must be (n, 2)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise ValueError("triangles must be (m, 3)")
        e1 = vertices[triangles[:, 1]] - vertices[triangles[:, 0]]
        e2 = vertices[triangles[:, 2]] - vertices[triangles[:, 0]]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(det <= AREA_TOL):
            bad = np.nonzero(det <= AREA_TOL)[0]
            raise DegenerateElementError(
                f"{bad.size} reference triangles have non-positive area "
                f"(first: {int(bad[0])})"
            )
        area = 0.5 * det
        # Rows of the inverse edge matrix give the non-corner shape gradients.
        inv_det = 1.0 / det
        r1 = np.stack([e2[:, 1] * inv_det, -e2[:, 0] * inv_det], axis=-1)
        r2 = np.stack([-e1[:, 1] * inv_det, e1[:, 0] * inv_det], axis=-1)
        grads = np.stack([-(r1 + r2), r1, r2], axis=1)
        loops = _boundary_loops(vertices.shape[0], triangles)
        bverts = np.unique(np.concatenate([np.asarray(l) for l in loops]) if loops else np.empty(0, np.int64))
        return cls(
            vertices=vertices,
            triangles=triangles,
            boundary_vertices=bverts,
            ref_area=area,
            shape_grads=grads,
            boundary_loops=tuple(tuple(int(v) for v in l) for l in loops),
        )

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @property
    def total_area(self):
        return float(np.sum(self.ref_area))

    def edges(self):
        """Unique undirected edges as a (k, 2) sorted-index array."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e = np.sort(e, axis=1)
        return np.unique(e, axis=0)

    def interior_mask(self):
        mask = np.ones(self.num_vertices, dtype=bool)
        mask[self.boundary_vertices] = False
        return mask

    def vertex_triangles(self):
        """List of triangle index arrays incident to each vertex."""
        out = [[] for _ in range(self.num_vertices)]
        for t, tri in enumerate(self.triangles):
            for v in tri:
                out[v].append(t)
        return [np.asarray(a, dtype=np.int64) for a in out]


def _boundary_loops(num_vertices, triangles):
    """Ordered boundary loops, with the domain on the left of each edge."""
    counts = {}
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    nxt = {}
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            if counts[(min(a, b), max(a, b))] == 1:
                nxt[int(a)] = int(b)
    loops = []
    seen = set()
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        cur = nxt[start]
        while cur != start:
            loop.append(cur)
            seen.add(cur)
            cur = nxt[cur]
        loops.append(loop)
    return loops


def _square_mesh(resolution):
    n = max(1, round(1.0 / resolution))
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    tris = []
    for i in range(n):
        for j in range(n):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            # Diagonal along the square's main diagonal keeps the mesh
            # symmetric under coordinate swap.
            tris.append((a, b, c))
            tris.append((a, c, d))
    return TriMesh.from_arrays(verts, np.asarray(tris))


def _ring_count(radius, resolution, sagitta_limited=False):
    m = max(6, math.ceil(2.0 * math.pi * radius / resolution))
    if sagitta_limited:
        # Keep the chordal sagitta below resolution^2 / 8.
        arg = min(1.0, resolution / (4.0 * math.sqrt(radius)))
        m = max(m, math.ceil(math.pi / (2.0 * math.asin(arg))))
    return m


def _ring(radius, count, stagger):
    ang = 2.0 * np.pi * np.arange(count) / count
    if stagger:
        ang = ang + np.pi / count
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])


def _stitch(inner_ids, outer_ids, angles_inner, angles_outer, tris):
    """Triangulate the strip between two concentric rings by angle merge."""
    mi, mo = len(inner_ids), len(outer_ids)
    i = j = 0
    # Align the starting outer vertex with the first inner angle.
    j0 = int(np.argmin(np.mod(angles_outer - angles_inner[0], 2.0 * np.pi)))
    off_o = np.mod(angles_outer - angles_inner[0], 2.0 * np.pi)
    off_i = np.mod(angles_inner - angles_inner[0], 2.0 * np.pi)
    order_o = np.argsort(off_o, kind="stable")
    off_o = off_o[order_o]
    outer_ids = [outer_ids[k] for k in order_o]
    while i < mi or j < mo:
        next_i = off_i[(i + 1) % mi] if (i + 1) < mi else 2.0 * np.pi
        next_j = off_o[(j + 1) % mo] if (j + 1) < mo else 2.0 * np.pi
        a = inner_ids[i % mi]
        b = outer_ids[j % mo]
        if (next_i <= next_j and i < mi) or j >= mo:
            a2 = inner_ids[(i + 1) % mi]
            tris.append((a, b, a2))
            i += 1
        else:
            b2 = outer_ids[(j + 1) % mo]
            tris.append((a, b, b2))
            j += 1


def _disk_mesh(radius, resolution):
    n_rings = max(1, round(radius / resolution))
    dr = radius / n_rings
    verts = [np.zeros((1, 2))]
    ring_ids = [[0]]
    ring_angles = [np.zeros(1)]
    nv = 1
    for k in range(1, n_rings + 1):
        rk = k * dr
        m = _ring_count(rk, resolution, sagitta_limited=(k == n_rings))
        pts = _ring(rk, m, stagger=(k % 2 == 1))
        verts.append(pts)
        ring_ids.append(list(range(nv, nv + m)))
        ring_angles.append(np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi))
        nv += m
    verts = np.concatenate(verts)
    tris = []
    # Fan around the center.
    first = ring_ids[1]
    for a, b in zip(first, first[1:] + first[:1]):
        tris.append((0, a, b))
    for k in range(1, n_rings):
        _stitch(ring_ids[k], ring_ids[k + 1], ring_angles[k], ring_angles[k + 1], tris)
    return TriMesh.from_arrays(verts, np.asarray(tris))


def _annulus_mesh(inner_radius, outer_radius, resolution):
    if not 0 < inner_radius < outer_radius:
        raise ValueError("annulus requires 0 < inner_radius < outer_radius")
    n_rings = max(1, round((outer_radius - inner_radius) / resolution))
    radii = np.linspace(inner_radius, outer_radius, n_rings + 1)
    verts = []
    ring_ids = []
    ring_angles = []
    nv = 0
    for k, rk in enumerate(radii):
        sag = k == 0 or k == n_rings
        m = _ring_count(rk, resolution, sagitta_limited=sag)
        pts = _ring(rk, m, stagger=(k % 2 == 1))
        verts.append(pts)
        ring_ids.append(list(range(nv, nv + m)))
        ring_angles.append(np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi))
        nv += m
    verts = np.concatenate(verts)
    tris = []
    for k in range(n_rings):
        _stitch(ring_ids[k], ring_ids[k + 1], ring_angles[k], ring_angles[k + 1], tris)
    return TriMesh.from_arrays(verts, np.asarray(tris))


def build_mesh(domain, resolution, **params):
    """Triangulate one of the builtin domains at a target edge length.

    domain: "unit_square", "disk" (param: radius), or "annulus"
    (params: inner_radius, outer_radius).
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if domain == "unit_square":
        return _square_mesh(resolution)
    if domain == "disk":
        return _disk_mesh(params.get("radius", 1.0), resolution)
    if domain == "annulus":
        return _annulus_mesh(
            params.get("inner_radius", 0.5),
            params.get("outer_radius", 1.0),
            resolution,
        )
    raise ValueError(f"unknown domain {domain!r}")


def save_mesh(path, positions, triangles, comments=()):
    """Write a Wavefront-style mesh; positions may be (n, 2) or (n, 3)."""
    positions = np.asarray(positions, dtype=float)
    if positions.shape[1] == 2:
        positions = np.column_stack([positions, np.zeros(positions.shape[0])])
    lines = [f"# {c}" for c in comments]
    for p in positions:
        lines.append(f"v {float(p[0])!r} {float(p[1])!r} {float(p[2])!r}")
    for t in np.asarray(triangles, dtype=np.int64):
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path):
    """Read a Wavefront-style mesh back as (positions (n,3), triangles)."""
    positions = []
    triangles = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "v" and len(parts) >= 4:
                positions.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f" and len(parts) >= 4:
                triangles.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
            else:
                raise ValueError(f"{path}:{lineno}: unrecognized record {parts[0]!r}")
    return np.asarray(positions, dtype=float), np.asarray(triangles, dtype=np.int64)
