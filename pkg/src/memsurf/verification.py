"""Randomized certificates for the constitutive hypotheses.

Each check draws a deterministic sample set from its seed, measures the
worst violation of the inequality it certifies, and reports pass/fail
against a fixed tolerance.  A report's ``worst_violation <= tolerance``
is equivalent to ``passed``, and re-running with the same (seed, n) is
bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constitutive import IsotropicModel, energy_density_batch, pk1_batch, phi_split_batch
from .errors import DeltaTooLargeError, InvalidEpsilonError

__all__ = [
    "CheckReport",
    "RankOneWitness",
    "check_objectivity",
    "check_isotropy",
    "check_midpoint_convexity",
    "check_negative_control",
    "rank_one_counterexample",
    "check_rank_one",
    "check_stress_growth",
    "check_perturbed_stress_bound",
    "check_growth",
    "run_all_checks",
    "shear_over_j",
    "shear_over_j_squared",
]

DEFAULT_EPS_GRID = (0.2, 0.1, 0.05, 0.01)
CONVEXITY_SLACK = 1e-10


@dataclass
class CheckReport:
    """Outcome of one randomized certificate."""

    check_name: str
    samples: int
    seed: int
    tolerance: float
    worst_violation: float
    passed: bool
    worst_witness: dict = field(default_factory=dict)
    empirical_constant: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "check_name": self.check_name,
            "samples": self.samples,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "worst_violation": self.worst_violation,
            "passed": self.passed,
            "worst_witness": self.worst_witness,
            "empirical_constant": self.empirical_constant,
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def to_text(self):
        lines = [
            f"check: {self.check_name}",
            f"passed: {str(self.passed).lower()}",
            f"samples: {self.samples}",
            f"seed: {self.seed}",
            f"tolerance: {self.tolerance!r}",
            f"worst_violation: {self.worst_violation!r}",
        ]
        if self.empirical_constant is not None:
            lines.append(f"empirical_constant: {self.empirical_constant!r}")
        for key in sorted(self.details):
            lines.append(f"{key}: {self.details[key]!r}")
        if self.worst_witness:
            lines.append("witness:")
            for key in sorted(self.worst_witness):
                lines.append(f"  {key}: {self.worst_witness[key]!r}")
        return "\n".join(lines) + "\n"


def _finish(report: CheckReport):
    report.passed = bool(report.worst_violation <= report.tolerance)
    return report


def _random_gradients(rng, n, lo=0.05, hi=20.0):
    """Full-rank 3x2 gradients with log-uniform stretches in [lo, hi]."""
    U = np.linalg.qr(rng.standard_normal((n, 3, 3)))[0][:, :, :2]
    lam = np.exp(rng.uniform(np.log(lo), np.log(hi), (n, 2)))
    V = np.linalg.qr(rng.standard_normal((n, 2, 2)))[0]
    return np.einsum("nik,nk,njk->nij", U, lam, V)


def _random_rotations(rng, n):
    Q = np.linalg.qr(rng.standard_normal((n, 3, 3)))[0]
    det = np.linalg.det(Q)
    Q[det < 0, :, 0] *= -1.0
    return Q


def check_objectivity(model, n=1000, seed=42, tolerance=1e-9):
    """max_F,Q |W(QF) - W(F)| / (1 + W(F)) over random rotations."""
    rng = np.random.default_rng(seed)
    F = _random_gradients(rng, n)
    Q = _random_rotations(rng, n)
    W0 = energy_density_batch(model, F)
    W1 = energy_density_batch(model, np.einsum("nij,njk->nik", Q, F))
    dev = np.abs(W1 - W0) / (1.0 + W0)
    i = int(np.argmax(dev))
    report = CheckReport(
        check_name="objectivity",
        samples=n,
        seed=seed,
        tolerance=tolerance,
        worst_violation=float(dev[i]),
        passed=False,
        worst_witness={"F": F[i].tolist(), "Q": Q[i].tolist()},
    )
    return _finish(report)


def check_isotropy(model, n=1000, seed=43, tolerance=1e-9):
    """max_F,R |W(F R) - W(F)| / (1 + W(F)) over random in-plane rotations."""
    rng = np.random.default_rng(seed)
    F = _random_gradients(rng, n)
    ang = rng.uniform(0.0, 2.0 * np.pi, n)
    ca, sa = np.cos(ang), np.sin(ang)
    R = np.stack(
        [np.stack([ca, -sa], axis=-1), np.stack([sa, ca], axis=-1)], axis=-2
    )
    W0 = energy_density_batch(model, F)
    W1 = energy_density_batch(model, np.einsum("nij,njk->nik", F, R))
    dev = np.abs(W1 - W0) / (1.0 + W0)
    i = int(np.argmax(dev))
    report = CheckReport(
        check_name="isotropy",
        samples=n,
        seed=seed,
        tolerance=tolerance,
        worst_violation=float(dev[i]),
        passed=False,
        worst_witness={"F": F[i].tolist(), "angle": float(ang[i])},
    )
    return _finish(report)


def _sample_fj_pairs(rng, n, f_norm_max=10.0, j_lo=0.05, j_hi=20.0):
    G = rng.standard_normal((n, 3, 2))
    G /= np.linalg.norm(G, axis=(1, 2), keepdims=True)
    F = G * (f_norm_max * rng.uniform(0.0, 1.0, (n, 1, 1)))
    J = np.exp(rng.uniform(np.log(j_lo), np.log(j_hi), n))
    return F, J


def shear_over_j(F, J):
    """(F.F)/J, jointly convex on J > 0."""
    return np.einsum("nij,nij->n", F, F) / J


def shear_over_j_squared(F, J):
    """(F.F)/J^2, not jointly convex."""
    return np.einsum("nij,nij->n", F, F) / J**2


def check_midpoint_convexity(
    phi, n=100_000, seed=44, name="split_convexity", weights_per_pair=10
):
    """Sampled convexity of a (F, J) functional along random segments.

    ``phi`` maps ((k, 3, 2), (k,)) batches to (k,) values.  Every pair is
    tested at the midpoint and at ``weights_per_pair`` random convex weights;
    an excess above the rounding slack 1e-10 (1 + phi1 + phi2) counts as a
    violation.
    """
    rng = np.random.default_rng(seed)
    F1, J1 = _sample_fj_pairs(rng, n)
    F2, J2 = _sample_fj_pairs(rng, n)
    p1 = np.asarray(phi(F1, J1))
    p2 = np.asarray(phi(F2, J2))
    slack = CONVEXITY_SLACK * (1.0 + p1 + p2)
    weights = np.concatenate([[0.5], rng.uniform(0.0, 1.0, weights_per_pair)])
    worst = -np.inf
    witness = {}
    violations = 0
    for w in weights:
        Fm = w * F1 + (1.0 - w) * F2
        Jm = w * J1 + (1.0 - w) * J2
        excess = np.asarray(phi(Fm, Jm)) - (w * p1 + (1.0 - w) * p2) - slack
        violations += int(np.count_nonzero(excess > 0))
        i = int(np.argmax(excess))
        if excess[i] > worst:
            worst = float(excess[i])
            witness = {
                "F1": F1[i].tolist(),
                "J1": float(J1[i]),
                "F2": F2[i].tolist(),
                "J2": float(J2[i]),
                "weight": float(w),
                "excess": float(excess[i]),
            }
    report = CheckReport(
        check_name=name,
        samples=n,
        seed=seed,
        tolerance=0.0,
        worst_violation=worst,
        passed=False,
        worst_witness=witness,
        details={"violations": violations, "weights_per_pair": weights_per_pair},
    )
    return _finish(report)


def check_negative_control(n=100_000, seed=44):
    """(F.F)/J^2 must exhibit at least one midpoint-convexity violation."""
    inner = check_midpoint_convexity(
        shear_over_j_squared, n=n, seed=seed, name="split_convexity_negative_control"
    )
    found = inner.details["violations"]
    report = CheckReport(
        check_name="split_convexity_negative_control",
        samples=n,
        seed=seed,
        tolerance=0.0,
        # Negative of the best excess: passing means a violation was found.
        worst_violation=-inner.worst_violation,
        passed=False,
        worst_witness=inner.worst_witness,
        details={"violations": found},
    )
    return _finish(report)


@dataclass(frozen=True)
class RankOneWitness:
    """Rank-one connected pair with a convexity gap at the midpoint."""

    lam: float
    mu: float
    eps: float
    F_plus: np.ndarray
    F_minus: np.ndarray
    F_bar: np.ndarray
    W_plus: float
    W_minus: float
    W_bar: float

    @property
    def gap(self):
        return self.W_bar - 0.5 * (self.W_plus + self.W_minus)


def rank_one_counterexample(model, lam=1.0, mu=1.0, eps=0.1):
    """Build the rank-one connected pair whose midpoint raises the energy.

    F+ and F- share the same stretch pair (lam, mu) while their average has
    stretches (lam, eps * mu); the area-ratio blowup makes the midpoint
    energy exceed the endpoint average for small eps.
    """
    if not (0.0 < eps < 1.0):
        raise InvalidEpsilonError("eps must lie in (0, 1)")
    if not (lam > 0 and mu > 0):
        raise ValueError("lam and mu must be positive")
    root = math.sqrt(1.0 - eps**2)
    F_plus = np.array([[lam, 0.0], [0.0, eps * mu], [0.0, mu * root]])
    F_minus = np.array([[lam, 0.0], [0.0, eps * mu], [0.0, -mu * root]])
    F_bar = 0.5 * (F_plus + F_minus)
    W = energy_density_batch(model, np.stack([F_plus, F_minus, F_bar]))
    return RankOneWitness(
        lam=lam,
        mu=mu,
        eps=eps,
        F_plus=F_plus,
        F_minus=F_minus,
        F_bar=F_bar,
        W_plus=float(W[0]),
        W_minus=float(W[1]),
        W_bar=float(W[2]),
    )


def check_rank_one(model, lam=1.0, mu=1.0, eps_grid=DEFAULT_EPS_GRID, seed=0):
    """Positive gaps across the eps grid, growing as eps shrinks."""
    eps_grid = tuple(sorted(eps_grid, reverse=True))
    witnesses = [rank_one_counterexample(model, lam, mu, e) for e in eps_grid]
    gaps = [w.gap for w in witnesses]
    required_positive = list(gaps)
    # Monotonicity: smaller eps must give a strictly larger gap.
    required_positive += [b - a for a, b in zip(gaps, gaps[1:])]
    worst = -float(min(required_positive))
    w0 = witnesses[0]
    report = CheckReport(
        check_name="rank_one_failure",
        samples=len(eps_grid),
        seed=seed,
        tolerance=0.0,
        worst_violation=worst,
        passed=False,
        worst_witness={
            "lam": lam,
            "mu": mu,
            "eps": w0.eps,
            "F_plus": w0.F_plus.tolist(),
            "F_bar": w0.F_bar.tolist(),
        },
        details={
            "eps_grid": list(eps_grid),
            "gaps": [float(g) for g in gaps],
            "W_endpoints": [float(w.W_plus) for w in witnesses],
        },
    )
    return _finish(report)


def _stress_growth_ratios(model, l1, l2):
    s1, s2 = model.scaled_stress_coefficients(l1, l2)
    phi = model.energy_from_stretches(l1, l2)
    return np.hypot(s1, s2) / (phi + 1.0)


def check_stress_growth(model, n=100_000, seed=45, stretch_lo=1e-3, stretch_hi=1e3):
    """Kirchhoff-stress growth |(l1 Phi_1, l2 Phi_2)| <= K (Phi + 1).

    K is the model's analytic bound, so the check is an inequality test, not
    an empirical sup chase; the empirical sup is recorded alongside.
    """
    rng = np.random.default_rng(seed)
    lam = np.exp(rng.uniform(np.log(stretch_lo), np.log(stretch_hi), (n, 2)))
    corners = np.array(
        [
            [stretch_lo, stretch_lo],
            [stretch_hi, stretch_hi],
            [stretch_lo, stretch_hi],
            [stretch_hi, stretch_lo],
            [1.0, 1.0],
        ]
    )
    lam = np.concatenate([lam, corners])
    l1 = np.maximum(lam[:, 0], lam[:, 1])
    l2 = np.minimum(lam[:, 0], lam[:, 1])
    ratios = _stress_growth_ratios(model, l1, l2)
    K = model.stress_bound_constant()
    i = int(np.argmax(ratios))
    report = CheckReport(
        check_name="stress_growth",
        samples=int(lam.shape[0]),
        seed=seed,
        tolerance=0.0,
        worst_violation=float(ratios[i] - K),
        passed=False,
        worst_witness={"l1": float(l1[i]), "l2": float(l2[i]), "ratio": float(ratios[i])},
        empirical_constant=float(ratios[i]),
        details={"K_declared": K},
    )
    return _finish(report)


def check_perturbed_stress_bound(model, delta=0.01, n=10_000, seed=46, stretch_lo=1e-3, stretch_hi=1e3):
    """Perturbed stress bound |W_F(TA) A^T| <= C (W(A) + 1), C = 2K/(1-2K delta).

    T ranges over linear maps of the range of A with |T - 1| < delta; delta
    must stay below 1/(2K) for the constant to make sense.
    """
    K = model.stress_bound_constant()
    if not delta < 1.0 / (2.0 * K):
        raise DeltaTooLargeError(
            f"delta = {delta} must be below 1/(2K) = {1.0 / (2.0 * K):.6g}"
        )
    C = 2.0 * K / (1.0 - 2.0 * K * delta)
    rng = np.random.default_rng(seed)
    U = np.linalg.qr(rng.standard_normal((n, 3, 3)))[0][:, :, :2]
    lam = np.exp(rng.uniform(np.log(stretch_lo), np.log(stretch_hi), (n, 2)))
    V = np.linalg.qr(rng.standard_normal((n, 2, 2)))[0]
    A = np.einsum("nik,nk,njk->nij", U, lam, V)
    E = rng.standard_normal((n, 2, 2))
    E *= (delta * 0.999 * rng.uniform(0.0, 1.0, (n, 1, 1))) / np.linalg.norm(
        E, axis=(1, 2), keepdims=True
    )
    T2 = np.broadcast_to(np.eye(2), (n, 2, 2)) + E
    # T acts on range(A): TA = U T2 U^T A, and U^T A = diag(lam) V^T.
    TA = np.einsum("nik,nkl,nl,nml->nim", U, T2, lam, V)
    S = pk1_batch(model, TA)
    lhs = np.linalg.norm(np.einsum("nij,nkj->nik", S, A), axis=(1, 2))
    rhs = energy_density_batch(model, A) + 1.0
    ratios = lhs / rhs
    i = int(np.argmax(ratios))
    report = CheckReport(
        check_name="perturbed_stress_bound",
        samples=n,
        seed=seed,
        tolerance=0.0,
        worst_violation=float(ratios[i] - C),
        passed=False,
        worst_witness={
            "l1": float(np.maximum(lam[i, 0], lam[i, 1])),
            "l2": float(np.minimum(lam[i, 0], lam[i, 1])),
            "T_deviation": float(np.linalg.norm(E[i])),
            "ratio": float(ratios[i]),
        },
        empirical_constant=float(ratios[i]),
        details={"delta": delta, "K_declared": K, "C": C},
    )
    return _finish(report)


def check_growth(model, n=100_000, seed=47, stretch_lo=1e-4, stretch_hi=1e4):
    """Coercivity flags plus the sampled lower bound W >= C1(|F|^p + J^-r) + C2.

    The fitted constants are C1 = min(min_j b_j, c)/2 and C2 = -4c; the
    blowup of Theta is probed at J = 1e-6 against the 1e10 floor.
    """
    rng = np.random.default_rng(seed)
    lam = np.exp(rng.uniform(np.log(stretch_lo), np.log(stretch_hi), (n, 2)))
    l1 = np.maximum(lam[:, 0], lam[:, 1])
    l2 = np.minimum(lam[:, 0], lam[:, 1])
    W = model.energy_from_stretches(l1, l2)
    p = model.growth_exponent
    r = model.theta.r
    c1 = 0.5 * min(min(bj for bj, _ in model.ogden_terms), model.theta.c)
    c2 = -4.0 * model.theta.c
    fnorm = np.hypot(l1, l2)
    J = l1 * l2
    lower = c1 * (fnorm**p + J ** (-r)) + c2
    shortfall = (lower - W) / (1.0 + np.abs(W))
    i = int(np.argmax(shortfall))
    blowup = float(model.theta.value(1e-6))
    components = {
        "coercivity_satisfied": model.coercivity_satisfied,
        "strong_coercivity_satisfied": model.strong_coercivity_satisfied,
        "sampled_bound_shortfall": float(shortfall[i]),
        "theta_blowup_at_1e-6": blowup,
    }
    worst = float(shortfall[i])
    for ok in (model.coercivity_satisfied, model.strong_coercivity_satisfied, blowup >= 1e10):
        if not ok:
            worst = max(worst, 1.0)
    report = CheckReport(
        check_name="coercivity_and_blowup",
        samples=n,
        seed=seed,
        tolerance=0.0,
        worst_violation=worst,
        passed=False,
        worst_witness={"l1": float(l1[i]), "l2": float(l2[i]), "W": float(W[i])},
        details={
            **components,
            "C1": c1,
            "C2": c2,
            "growth_exponent": p,
        },
    )
    return _finish(report)


def run_all_checks(
    model: IsotropicModel,
    seed=42,
    convexity_samples=100_000,
    rotation_samples=1000,
    stress_growth_samples=100_000,
    perturbation_samples=10_000,
    perturbation_delta=0.01,
    growth_samples=100_000,
):
    """The full certificate battery in a fixed order (eight reports)."""

    def phi_model(F, J):
        return phi_split_batch(model, F, J)

    return [
        check_objectivity(model, n=rotation_samples, seed=seed),
        check_isotropy(model, n=rotation_samples, seed=seed + 1),
        check_midpoint_convexity(phi_model, n=convexity_samples, seed=seed + 2),
        check_negative_control(n=convexity_samples, seed=seed + 2),
        check_rank_one(model, seed=seed),
        check_stress_growth(model, n=stress_growth_samples, seed=seed + 3),
        check_perturbed_stress_bound(model, delta=perturbation_delta, n=perturbation_samples, seed=seed + 4),
        check_growth(model, n=growth_samples, seed=seed + 5),
    ]
