"""Piecewise-linear configurations on a surface and energy assembly.

A configuration places every mesh vertex on the target surface; per element
the deformation gradient F of the linear interpolant is constant, so
one-point quadrature integrates the stored energy exactly.  The oriented
area ratio J pairs the element's image cross product with the surface normal
at the projected element centroid; its sign flags orientation violations
while the energy itself is evaluated through the principal stretches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import (
    _spectral_batch,
    energy_density,
    pk1_batch,
)
from .errors import NegativeJError, OffSurfaceError, RankDeficientError
from .mesh import TriMesh

__all__ = [
    "Configuration",
    "ElementState",
    "element_gradient",
    "total_energy",
    "energy_gradient",
    "element_data",
]

J_FLOOR_DEFAULT = 1e-8


@dataclass
class Configuration:
    """Nodal surface positions for a reference mesh."""

    surface: object
    positions: np.ndarray  # (n, 3)

    @classmethod
    def from_map(cls, surface, mesh, f0, check_on_surface=True):
        """Evaluate a closed-form map at the mesh vertices.

        ``f0`` maps (n, 2) reference coordinates to (n, 3) surface points.
        Boundary values are taken exactly as returned, never projected.
        """
        pos = np.asarray(f0(mesh.vertices), dtype=float)
        if pos.shape != (mesh.num_vertices, 3):
            raise ValueError("initial map must return one 3-vector per vertex")
        if check_on_surface:
            d = np.atleast_1d(surface.distance(pos))
            if np.any(d > surface.on_surface_tol):
                raise OffSurfaceError(
                    f"initial map leaves the surface by {float(np.max(d)):.3e}"
                )
        return cls(surface=surface, positions=pos)

    def copy(self):
        return Configuration(self.surface, self.positions.copy())


@dataclass(frozen=True)
class ElementState:
    """Per-triangle kinematics: gradient, area ratios, density."""

    F: np.ndarray            # (3, 2)
    J: float                 # oriented area ratio (can be <= 0)
    area_ratio: float        # |f_,1 x f_,2| = lam1 * lam2 >= |J|
    W: float                 # stored energy density
    centroid_image: np.ndarray
    degenerate: bool


def deformation_gradients(mesh: TriMesh, config: Configuration):
    """Constant per-element gradients F_t = sum_i y_i (x) g_i, shape (m, 3, 2)."""
    Y = config.positions[mesh.triangles]           # (m, 3verts, 3)
    return np.einsum("tva,tvb->tab", Y, mesh.shape_grads)


def oriented_area_ratios(mesh: TriMesh, config: Configuration, F=None):
    """Oriented J per element: n(projected centroid) . (F e1 x F e2)."""
    if F is None:
        F = deformation_gradients(mesh, config)
    cross = np.cross(F[:, :, 0], F[:, :, 1])
    centroids = config.positions[mesh.triangles].mean(axis=1)
    normals = config.surface.normal_unchecked(config.surface.project(centroids))
    return np.einsum("ti,ti->t", normals, cross)


def element_data(model, mesh, config):
    """(F, J_oriented, area_ratio, W) arrays for all elements."""
    F = deformation_gradients(mesh, config)
    J = oriented_area_ratios(mesh, config, F)
    l1, l2, *_ = _spectral_batch(F)
    area_ratio = l1 * l2
    W = model.upsilon(l1, l2) + model.b * (l1**2 + l2**2) / np.maximum(
        area_ratio, 1e-300
    ) + model.theta.value(np.maximum(area_ratio, 1e-300))
    return F, J, area_ratio, W


def element_gradient(model, mesh, config, t, j_floor=J_FLOOR_DEFAULT):
    """State of one element; degenerate reference data raises, negative J flags."""
    tri = mesh.triangles[t]
    Y = config.positions[tri]
    F = np.einsum("va,vb->ab", Y, mesh.shape_grads[t])
    C = F.T @ F
    det = float(np.linalg.det(C))
    if det <= (1e-12 * max(np.trace(C), 1e-300)) ** 2:
        raise RankDeficientError(f"element {t} has a rank-deficient gradient")
    cross = np.cross(F[:, 0], F[:, 1])
    centroid = Y.mean(axis=0)
    n = config.surface.normal_unchecked(config.surface.project(centroid))
    J = float(n @ cross)
    W = energy_density(model, F)
    return ElementState(
        F=F,
        J=J,
        area_ratio=float(np.sqrt(det)),
        W=W,
        centroid_image=centroid,
        degenerate=J <= j_floor,
    )


def total_energy(model, mesh, config):
    """Total stored energy; raises NegativeJError listing infeasible elements."""
    F, J, area_ratio, W = element_data(model, mesh, config)
    bad = np.nonzero(J <= 0)[0]
    if bad.size:
        raise NegativeJError(
            f"{bad.size} elements have non-positive oriented area ratio",
            elements=bad.tolist(),
        )
    return float(np.sum(mesh.ref_area * W))


def trial_energy(model, mesh, surface, positions, j_floor=J_FLOOR_DEFAULT):
    """Non-raising energy evaluation for line-search trials.

    Returns (energy, min_J, feasible); energy is only meaningful when
    feasible is True.
    """
    Y = positions[mesh.triangles]
    F = np.einsum("tva,tvb->tab", Y, mesh.shape_grads)
    cross = np.cross(F[:, :, 0], F[:, :, 1])
    centroids = Y.mean(axis=1)
    normals = surface.normal_unchecked(surface.project(centroids))
    J = np.einsum("ti,ti->t", normals, cross)
    min_j = float(np.min(J)) if J.size else np.inf
    if min_j <= j_floor:
        return np.inf, min_j, False
    l1, l2, *_ = _spectral_batch(F)
    ar = l1 * l2
    W = (
        model.upsilon(l1, l2)
        + model.b * (l1**2 + l2**2) / ar
        + model.theta.value(ar)
    )
    return float(np.sum(mesh.ref_area * W)), min_j, True


def energy_gradient(model, mesh, config):
    """Ambient gradient of the total energy with respect to nodal positions.

    The density depends on the nodes only through F, so the assembled
    gradient is sum_t A_t S_t g_{t,i} at each vertex i; it matches central
    finite differences of ``total_energy`` to rounding error.
    """
    F, J, area_ratio, W = element_data(model, mesh, config)
    bad = np.nonzero(J <= 0)[0]
    if bad.size:
        raise NegativeJError(
            f"{bad.size} elements have non-positive oriented area ratio",
            elements=bad.tolist(),
        )
    S = pk1_batch(model, F)                        # (m, 3, 2)
    contrib = mesh.ref_area[:, None, None] * np.einsum(
        "tab,tvb->tva", S, mesh.shape_grads
    )
    grad = np.zeros((mesh.num_vertices, 3))
    np.add.at(grad, mesh.triangles, contrib)
    return grad
