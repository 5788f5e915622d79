"""Isotropic membrane energy densities and their stresses.

The stored energy of a 3x2 deformation gradient F with principal stretches
l1 >= l2 > 0 and area ratio J = l1*l2 is

    W(F) = sum_j b_j (l1^g_j + l2^g_j)  +  b (F.F)/J  +  Theta(J),
    Theta(J) = c (J^q + J^(-r) - 2),

which is convex as a joint function of (F, J), blows up as J -> 0+, and is
frame indifferent and isotropic by construction.  ``phi_split`` evaluates the
same expression with F and J treated as independent arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidModelError,
    NonpositiveJError,
    RankDeficientError,
)

__all__ = [
    "ThetaModel",
    "IsotropicModel",
    "StretchPair",
    "StressState",
    "default_model",
    "stretches",
    "energy_density",
    "pk1_stress",
    "phi_split",
]

# Relative threshold under which F is treated as rank deficient.
RANK_REL_TOL = 1e-12
# Relative stretch gap under which the spectral pair is treated as repeated.
REPEATED_STRETCH_REL = 1e-8


@dataclass(frozen=True)
class ThetaModel:
    """Convex area-ratio penalty Theta(J) = c (J^q + J^(-r) - 2)."""

    c: float = 1.5
    q: float = 2.0
    r: float = 4.0

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidModelError("theta coefficient c must be > 0")
        if not self.q > 1:
            raise InvalidModelError("theta exponent q must be > 1")
        if not self.r > 0:
            raise InvalidModelError("theta exponent r must be > 0")

    def value(self, J):
        J = np.asarray(J, dtype=float)
        return self.c * (J**self.q + J ** (-self.r) - 2.0)

    def derivative(self, J):
        J = np.asarray(J, dtype=float)
        return self.c * (self.q * J ** (self.q - 1.0) - self.r * J ** (-self.r - 1.0))

    def second_derivative(self, J):
        J = np.asarray(J, dtype=float)
        return self.c * (
            self.q * (self.q - 1.0) * J ** (self.q - 2.0)
            + self.r * (self.r + 1.0) * J ** (-self.r - 2.0)
        )

    def j_times_derivative(self, J):
        """J Theta'(J) = c (q J^q - r J^(-r)), the area-ratio stress term."""
        J = np.asarray(J, dtype=float)
        return self.c * (self.q * J**self.q - self.r * J ** (-self.r))

    @property
    def argmin(self):
        """Location of the minimum of J^q + J^(-r) on (0, inf)."""
        return (self.r / self.q) ** (1.0 / (self.q + self.r))

    @property
    def minimum_value(self):
        """Exact minimum of Theta; zero iff q == r, negative otherwise."""
        return float(self.value(self.argmin))


@dataclass(frozen=True)
class IsotropicModel:
    """Two-dimensional isotropic stored energy with split structure.

    ``ogden_terms`` is a sequence of (coefficient, exponent) pairs with
    coefficient > 0 and exponent >= 1; ``b`` scales the convex (F.F)/J term.
    The model must keep the total density nonnegative, which holds whenever
    2 b + min Theta >= 0 (the remaining terms are nonnegative).
    """

    ogden_terms: tuple = ((1.0, 3.0),)
    b: float = 1.0
    theta: ThetaModel = field(default_factory=ThetaModel)
    label: str = "default"

    def __post_init__(self):
        terms = tuple((float(bj), float(gj)) for bj, gj in self.ogden_terms)
        object.__setattr__(self, "ogden_terms", terms)
        if not terms:
            raise InvalidModelError("at least one ogden term is required")
        for bj, gj in terms:
            if not bj > 0:
                raise InvalidModelError("ogden coefficients must be > 0")
            if not gj >= 1:
                raise InvalidModelError("ogden exponents must be >= 1")
        if self.b < 0:
            raise InvalidModelError("shear coefficient b must be >= 0")
        if 2.0 * self.b + self.theta.minimum_value < 0:
            raise InvalidModelError(
                "density can go negative: need 2*b + min(Theta) >= 0, got "
                f"{2.0 * self.b + self.theta.minimum_value:.6g}"
            )

    # -- derived exponents and admissibility flags -----------------------------
    @property
    def growth_exponent(self):
        """p = max_j gamma_j, the stretch growth rate of the density."""
        return max(gj for _, gj in self.ogden_terms)

    @property
    def coercivity_satisfied(self):
        """Coercivity flag: growth exponent above 4/3 (J^q term is built in)."""
        return self.growth_exponent > 4.0 / 3.0

    @property
    def strong_coercivity_satisfied(self):
        """Strengthened coercivity: p > 2 and r > p/(p - 2)."""
        p = self.growth_exponent
        return p > 2.0 and self.theta.r > p / (p - 2.0)

    def stress_bound_constant(self):
        """Analytic K with |(l1 Phi_1, l2 Phi_2)| <= K (Phi + 1) everywhere.

        Componentwise, |l g Phi_g| is bounded by gmax * Upsilon for the
        stretch terms, by the (F.F)/J term itself for the shear part (with
        opposite signs in the two components), and by max(q, r) (Theta + 2c)
        for the area term, giving

            |(l1 Phi_1, l2 Phi_2)| <= K0 Phi + K1,
            K0 = max(gmax, sqrt(2) max(q, r)),  K1 = 2 sqrt(2) c max(q, r).

        Since Phi >= Phi_min = max(0, 2b + min Theta), the ratio against
        Phi + 1 is maximized at Phi_min.
        """
        gmax = self.growth_exponent
        mqr = max(self.theta.q, self.theta.r)
        k0 = max(gmax, math.sqrt(2.0) * mqr)
        k1 = 2.0 * math.sqrt(2.0) * self.theta.c * mqr
        phi_min = max(0.0, 2.0 * self.b + self.theta.minimum_value)
        return max(k0, (k0 * phi_min + k1) / (phi_min + 1.0))

    # -- stretch-space evaluation (vectorized) ---------------------------------
    def upsilon(self, l1, l2):
        l1 = np.asarray(l1, dtype=float)
        l2 = np.asarray(l2, dtype=float)
        out = np.zeros(np.broadcast(l1, l2).shape)
        for bj, gj in self.ogden_terms:
            out = out + bj * (l1**gj + l2**gj)
        return out

    def energy_from_stretches(self, l1, l2):
        l1 = np.asarray(l1, dtype=float)
        l2 = np.asarray(l2, dtype=float)
        J = l1 * l2
        shear = self.b * (l1**2 + l2**2) / J
        return self.upsilon(l1, l2) + shear + self.theta.value(J)

    def stress_coefficients(self, l1, l2):
        """Partial derivatives (Phi_1, Phi_2) of the stretch representation."""
        s1, s2 = self.scaled_stress_coefficients(l1, l2)
        return s1 / np.asarray(l1, dtype=float), s2 / np.asarray(l2, dtype=float)

    def scaled_stress_coefficients(self, l1, l2):
        """(l1 Phi_1, l2 Phi_2), the principal Kirchhoff stresses."""
        l1 = np.asarray(l1, dtype=float)
        l2 = np.asarray(l2, dtype=float)
        J = l1 * l2
        jtp = self.theta.j_times_derivative(J)
        ups1 = np.zeros(np.broadcast(l1, l2).shape)
        ups2 = np.zeros_like(ups1)
        for bj, gj in self.ogden_terms:
            ups1 = ups1 + bj * gj * l1**gj
            ups2 = ups2 + bj * gj * l2**gj
        shear = self.b * (l1**2 - l2**2) / J
        return ups1 + shear + jtp, ups2 - shear + jtp

    def to_dict(self):
        return {
            "ogden_terms": [{"b": bj, "gamma": gj} for bj, gj in self.ogden_terms],
            "b": self.b,
            "theta": {"c": self.theta.c, "q": self.theta.q, "r": self.theta.r},
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data):
        terms = tuple((t["b"], t["gamma"]) for t in data["ogden_terms"])
        th = data.get("theta", {})
        return cls(
            ogden_terms=terms,
            b=float(data.get("b", 0.0)),
            theta=ThetaModel(
                c=float(th.get("c", 1.5)),
                q=float(th.get("q", 2.0)),
                r=float(th.get("r", 4.0)),
            ),
            label=str(data.get("label", "")),
        )


def default_model():
    """Stress-free-at-identity default: a=1, gamma=3, b=1, c=1.5, q=2, r=4."""
    return IsotropicModel()


@dataclass(frozen=True)
class StretchPair:
    """Spectral data of a 3x2 gradient: F = sum_g lam_g d_g (x) r_g."""

    lam1: float
    lam2: float
    d1: np.ndarray
    d2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray

    @property
    def area_ratio(self):
        return self.lam1 * self.lam2


@dataclass(frozen=True)
class StressState:
    """First Piola-Kirchhoff stress with its spatial companions.

    ``kirchhoff`` is sigma = pk1 F^T restricted to the range of F (stored as
    a 3x3 matrix annihilating the normal direction); ``cauchy`` is sigma / J.
    """

    pk1: np.ndarray
    kirchhoff: np.ndarray
    cauchy: np.ndarray


def _spectral_batch(F):
    """Closed-form spectral data of a batch of 3x2 matrices.

    Returns (l1, l2, r1, r2, d1, d2) with l1 >= l2 >= 0.  The small
    eigenvalue is computed as det(C)/e1 to avoid cancellation; at repeated
    stretches the right pair defaults to the coordinate axes (any orthonormal
    pair is valid there).
    """
    F = np.asarray(F, dtype=float)
    c11 = np.einsum("...i,...i->...", F[..., :, 0], F[..., :, 0])
    c22 = np.einsum("...i,...i->...", F[..., :, 1], F[..., :, 1])
    c12 = np.einsum("...i,...i->...", F[..., :, 0], F[..., :, 1])
    det = c11 * c22 - c12**2
    mean = 0.5 * (c11 + c22)
    diff = 0.5 * (c11 - c22)
    rad = np.hypot(diff, c12)
    e1 = mean + rad
    safe_e1 = np.where(e1 > 0, e1, 1.0)
    e2 = np.clip(det / safe_e1, 0.0, None)
    l1 = np.sqrt(np.clip(e1, 0.0, None))
    l2 = np.sqrt(e2)

    repeated = rad <= REPEATED_STRETCH_REL * np.maximum(e1, 1e-300)
    # Eigenvector of C for e1, branch chosen for conditioning.
    v1a = np.stack([rad + diff, c12], axis=-1)
    v1b = np.stack([c12, rad - diff], axis=-1)
    v1 = np.where((diff >= 0)[..., None], v1a, v1b)
    v1 = np.where(repeated[..., None], np.broadcast_to([1.0, 0.0], v1.shape), v1)
    norm = np.linalg.norm(v1, axis=-1, keepdims=True)
    v1 = v1 / np.where(norm > 0, norm, 1.0)
    v2 = np.stack([-v1[..., 1], v1[..., 0]], axis=-1)

    d1 = np.einsum("...ij,...j->...i", F, v1)
    d2 = np.einsum("...ij,...j->...i", F, v2)
    d1 = d1 / np.maximum(l1[..., None], 1e-300)
    d2 = d2 / np.maximum(l2[..., None], 1e-300)
    return l1, l2, v1, v2, d1, d2


def _check_rank(F, det, trace):
    bad = det <= (RANK_REL_TOL * np.maximum(trace, 1e-300)) ** 2
    if np.any(bad):
        raise RankDeficientError(
            "deformation gradient is numerically rank deficient "
            f"(det C = {float(np.min(det)):.3e})"
        )


def stretches(F):
    """Principal stretches and singular frames of a full-rank 3x2 gradient."""
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 2):
        raise ValueError("F must be a 3x2 matrix")
    C = F.T @ F
    _check_rank(F, np.linalg.det(C), np.trace(C))
    l1, l2, r1, r2, d1, d2 = _spectral_batch(F)
    return StretchPair(float(l1), float(l2), d1, d2, r1, r2)


def energy_density(model, F):
    """Stored energy of a single orientation-capable 3x2 gradient."""
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 2):
        raise ValueError("F must be a 3x2 matrix")
    return float(energy_density_batch(model, F[None, :, :])[0])


def energy_density_batch(model, F):
    """Vectorized stored energy over a (n, 3, 2) batch."""
    F = np.asarray(F, dtype=float)
    c11 = np.einsum("...i,...i->...", F[..., :, 0], F[..., :, 0])
    c22 = np.einsum("...i,...i->...", F[..., :, 1], F[..., :, 1])
    c12 = np.einsum("...i,...i->...", F[..., :, 0], F[..., :, 1])
    det = c11 * c22 - c12**2
    trace = c11 + c22
    _check_rank(F, det, trace)
    l1, l2, *_ = _spectral_batch(F)
    J = np.sqrt(det)
    return model.upsilon(l1, l2) + model.b * trace / J + model.theta.value(J)


def pk1_stress(model, F):
    """Spectral first Piola-Kirchhoff stress and its spatial companions."""
    pair = stretches(F)
    p1, p2 = model.stress_coefficients(pair.lam1, pair.lam2)
    pk1 = p1 * np.outer(pair.d1, pair.r1) + p2 * np.outer(pair.d2, pair.r2)
    s1, s2 = model.scaled_stress_coefficients(pair.lam1, pair.lam2)
    kirchhoff = s1 * np.outer(pair.d1, pair.d1) + s2 * np.outer(pair.d2, pair.d2)
    cauchy = kirchhoff / pair.area_ratio
    return StressState(pk1=pk1, kirchhoff=kirchhoff, cauchy=cauchy)


def pk1_batch(model, F):
    """Vectorized PK1 stress over a (n, 3, 2) batch."""
    l1, l2, r1, r2, d1, d2 = _spectral_batch(F)
    p1, p2 = model.stress_coefficients(l1, l2)
    return p1[..., None, None] * np.einsum(
        "...i,...j->...ij", d1, r1
    ) + p2[..., None, None] * np.einsum("...i,...j->...ij", d2, r2)


def phi_split(model, F, J):
    """Split density Phi(F, J) with independent area-ratio argument."""
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 2):
        raise ValueError("F must be a 3x2 matrix")
    return float(phi_split_batch(model, F[None, :, :], np.asarray([J], dtype=float))[0])


def phi_split_batch(model, F, J):
    """Vectorized Phi(F, J) over batches; F may be rank deficient here."""
    F = np.asarray(F, dtype=float)
    J = np.asarray(J, dtype=float)
    if np.any(J <= 0):
        raise NonpositiveJError("phi_split requires J > 0")
    l1, l2, *_ = _spectral_batch(F)
    trace = np.einsum("...ij,...ij->...", F, F)
    return model.upsilon(l1, l2) + model.b * trace / J + model.theta.value(J)
