import numpy as np
import pytest

from memsurf import (
    BoundaryTooCloseError,
    Configuration,
    IrregularValueError,
    boundary_winding,
    brouwer_degree,
    build_mesh,
    first_variation_residual,
    injectivity_check,
    minimize,
)
from memsurf.maps import make_initial_map


@pytest.fixture(scope="module")
def disk_identity(plane):
    mesh = build_mesh("disk", 0.15)
    cfg = Configuration.from_map(plane, mesh, make_initial_map(plane, "identity"))
    return mesh, cfg


@pytest.fixture(scope="module")
def annulus_winding(plane):
    mesh = build_mesh("annulus", 0.07, inner_radius=0.5, outer_radius=1.0)

    def doubled_angle(x):
        r = np.linalg.norm(x, axis=1)
        th = np.arctan2(x[:, 1], x[:, 0])
        return plane.embed(np.column_stack([r * np.cos(2 * th), r * np.sin(2 * th)]))

    cfg = Configuration.from_map(plane, mesh, doubled_angle)
    return mesh, cfg


class TestDegree:
    def test_identity_disk_origin(self, plane, disk_identity):
        mesh, cfg = disk_identity
        res = brouwer_degree(plane, mesh, cfg, np.zeros(3))
        assert res.degree == 1
        assert res.signed_cover_count == 1
        assert res.methods_agree
        assert abs(res.mollified_integral - 1.0) < 0.5

    def test_reflection_gives_minus_one(self, plane, disk_identity):
        mesh, _ = disk_identity
        cfg = Configuration.from_map(
            plane,
            mesh,
            make_initial_map(plane, "affine", matrix=np.array([[0.0, 1.0], [1.0, 0.0]])),
        )
        y = np.array([0.2, 0.1, 0.0])
        res = brouwer_degree(plane, mesh, cfg, y)
        assert res.degree == -1
        assert res.methods_agree
        assert boundary_winding(plane, mesh, cfg, y) == -1

    def test_double_winding(self, plane, annulus_winding):
        mesh, cfg = annulus_winding
        y = np.array([0.7, 0.05, 0.0])
        res = brouwer_degree(plane, mesh, cfg, y)
        assert res.degree == 2
        assert res.methods_agree
        assert boundary_winding(plane, mesh, cfg, y) == 2

    def test_degree_zero_outside_image(self, plane, annulus_winding):
        mesh, cfg = annulus_winding
        y = np.array([0.05, 0.0, 0.0])  # inside the hole
        res = brouwer_degree(plane, mesh, cfg, y)
        assert res.degree == 0
        assert res.mollified_integral == pytest.approx(0.0, abs=1e-9)
        assert boundary_winding(plane, mesh, cfg, y) == 0

    def test_oracle_matches_both_methods_on_suite(self, plane, disk_identity, annulus_winding):
        rng = np.random.default_rng(20)
        cases = []
        mesh_i, cfg_i = disk_identity
        cases.append((mesh_i, cfg_i, lambda r: r * 0.85, 1))
        mesh_r, _ = disk_identity
        cfg_r = Configuration.from_map(
            plane,
            mesh_r,
            make_initial_map(plane, "affine", matrix=np.array([[0.0, 1.0], [1.0, 0.0]])),
        )
        cases.append((mesh_r, cfg_r, lambda r: r * 0.85, -1))
        mesh_w, cfg_w = annulus_winding
        cases.append((mesh_w, cfg_w, lambda r: 0.55 + 0.4 * r, 2))
        for mesh, cfg, rmap, expected in cases:
            for _ in range(10):
                ang = rng.uniform(0, 2 * np.pi)
                rr = rmap(rng.uniform(0.05, 0.95))
                y = np.array([rr * np.cos(ang), rr * np.sin(ang), 0.0])
                res = brouwer_degree(plane, mesh, cfg, y)
                oracle = boundary_winding(plane, mesh, cfg, y)
                assert res.degree == oracle == expected
                assert res.signed_cover_count == oracle
                assert res.methods_agree

    def test_boundary_proximity_rejected(self, plane, disk_identity):
        mesh, cfg = disk_identity
        loop = mesh.boundary_loops[0]
        on_edge = 0.5 * (cfg.positions[loop[0]] + cfg.positions[loop[1]])
        with pytest.raises(BoundaryTooCloseError):
            brouwer_degree(plane, mesh, cfg, on_edge)

    def test_irregular_value_without_nudge(self, plane, disk_identity):
        mesh, cfg = disk_identity
        with pytest.raises(IrregularValueError):
            brouwer_degree(plane, mesh, cfg, np.zeros(3), nudge=False)

    def test_invariant_under_interior_perturbation(self, plane, disk_identity):
        mesh, _ = disk_identity
        rng = np.random.default_rng(21)
        y = np.array([0.3, 0.2, 0.0])
        base = Configuration.from_map(plane, mesh, make_initial_map(plane, "identity"))
        d0 = brouwer_degree(plane, mesh, base, y).degree
        interior = mesh.interior_mask()
        for _ in range(10):
            cfg = Configuration(plane, base.positions.copy())
            cfg.positions[interior, :2] += 0.002 * rng.standard_normal(
                (int(interior.sum()), 2)
            )
            res = brouwer_degree(plane, mesh, cfg, y)
            assert res.degree == d0 == 1

    def test_invariant_under_radius_halving(self, plane, disk_identity):
        mesh, cfg = disk_identity
        y = np.array([0.25, -0.15, 0.0])
        r0 = brouwer_degree(plane, mesh, cfg, y)
        r1 = brouwer_degree(plane, mesh, cfg, y, mollifier_radius=r0.mollifier_radius / 2)
        assert r0.degree == r1.degree
        assert round(r0.mollified_integral) == round(r1.mollified_integral)

    def test_on_sphere_cap(self, model, sphere):
        mesh = build_mesh("disk", 0.15)
        f0 = make_initial_map(sphere, "stereographic_cap", latitude=np.pi / 3)
        cfg, _ = minimize(model, sphere, mesh, f0)
        rng = np.random.default_rng(22)
        for _ in range(10):
            x = rng.uniform(-0.5, 0.5, 2)
            y = np.asarray(f0(x[None]))[0]
            res = brouwer_degree(sphere, mesh, cfg, y)
            assert res.degree == 1
            assert res.methods_agree


class TestInjectivity:
    def test_identity_clean(self, plane, disk_identity):
        mesh, cfg = disk_identity
        rep = injectivity_check(plane, mesh, cfg)
        assert rep.injective
        assert rep.overlapping_pairs == 0
        assert rep.total_overlap_area == 0.0
        assert rep.checked_pairs > 0

    def test_fold_overlap_area(self, plane):
        mesh = build_mesh("unit_square", 1 / 16)

        def fold(x):
            u = np.maximum(x[:, 0], x[:, 1])
            v = np.minimum(x[:, 0], x[:, 1])
            return plane.embed(np.column_stack([u, v]))

        cfg = Configuration.from_map(plane, mesh, fold)
        rep = injectivity_check(plane, mesh, cfg)
        assert not rep.injective
        assert rep.overlapping_pairs > 0
        # Half the square is folded over; the strip of edge-adjacent mirror
        # elements along the diagonal is excluded from the pair scan.
        h = 1 / 16
        assert 0.5 - 2 * h <= rep.total_overlap_area <= 0.5 + 1e-12

    def test_converged_cap_injective(self, model, sphere):
        mesh = build_mesh("disk", 0.15)
        f0 = make_initial_map(sphere, "stereographic_cap", latitude=np.pi / 3)
        cfg, _ = minimize(model, sphere, mesh, f0)
        rep = injectivity_check(sphere, mesh, cfg)
        assert rep.injective
        assert rep.total_overlap_area <= 1e-12

    def test_image_area_additivity_for_injective_affine(self, model, plane):
        from memsurf.discretization import element_data

        mesh = build_mesh("unit_square", 0.1)
        A = np.array([[1.1, 0.2], [0.0, 0.9]])
        cfg = Configuration.from_map(
            plane, mesh, make_initial_map(plane, "affine", matrix=A)
        )
        _, J, _, _ = element_data(model, mesh, cfg)
        image_area = float(np.sum(mesh.ref_area * np.abs(J)))
        assert image_area == pytest.approx(abs(np.linalg.det(A)), abs=1e-8)

    def test_folded_map_double_counts_area(self, model, plane):
        from memsurf.discretization import element_data

        mesh = build_mesh("unit_square", 0.1)

        def fold(x):
            u = np.maximum(x[:, 0], x[:, 1])
            v = np.minimum(x[:, 0], x[:, 1])
            return plane.embed(np.column_stack([u, v]))

        cfg = Configuration.from_map(plane, mesh, fold)
        _, J, _, _ = element_data(model, mesh, cfg)
        image_area = float(np.sum(mesh.ref_area * np.abs(J)))
        # Covered region has area 1/2 but is traversed twice.
        assert image_area == pytest.approx(1.0, abs=1e-12)


@pytest.fixture(scope="module")
def cap(model, sphere):
    mesh = build_mesh("disk", 0.12)
    f0 = make_initial_map(sphere, "stereographic_cap", latitude=np.pi / 3)
    cfg, report = minimize(model, sphere, mesh, f0)
    return mesh, f0, cfg, report


class TestResiduals:
    def test_converged_residual_small(self, model, sphere, cap):
        mesh, _, cfg, report = cap
        grad_tol = 1e-7 * mesh.total_area
        results = first_variation_residual(model, sphere, mesh, cfg, 12, seed=0)
        assert len(results) == 12
        worst = max(abs(r.lagrangian_residual) / r.normalization for r in results)
        assert worst <= 10 * grad_tol

    def test_lagrangian_equals_eulerian(self, model, sphere, plane, cap):
        mesh, f0, cfg, _ = cap
        for surface, config in [
            (sphere, cfg),
            (sphere, Configuration.from_map(sphere, mesh, f0)),
        ]:
            for r in first_variation_residual(model, surface, mesh, config, 8, seed=3):
                assert abs(r.lagrangian_residual - r.eulerian_residual) <= 1e-10 * max(
                    r.normalization, 1e-30
                )

    def test_nonstationary_residual_large(self, model, sphere, cap):
        mesh, f0, _, _ = cap
        grad_tol = 1e-7 * mesh.total_area
        cfg0 = Configuration.from_map(sphere, mesh, f0)
        results = first_variation_residual(model, sphere, mesh, cfg0, 12, seed=0)
        worst = max(abs(r.lagrangian_residual) / r.normalization for r in results)
        assert worst > 1e3 * grad_tol

    def test_stress_free_identity_zero_residual(self, model, plane):
        mesh = build_mesh("disk", 0.2)
        cfg = Configuration.from_map(plane, mesh, make_initial_map(plane, "identity"))
        for r in first_variation_residual(model, plane, mesh, cfg, 6, seed=1):
            assert abs(r.lagrangian_residual) < 1e-12

    def test_variations_admissible(self, model, sphere, cap):
        mesh, _, cfg, _ = cap
        results = first_variation_residual(model, sphere, mesh, cfg, 12, seed=0)
        assert all(r.admissible for r in results)

    def test_fields_vanish_on_boundary(self, model, sphere, cap):
        from memsurf.diagnostics import _test_fields

        mesh, _, cfg, _ = cap
        for _, _, _, _, psi in _test_fields(sphere, mesh, cfg, 12, seed=0):
            assert np.abs(psi[mesh.boundary_vertices]).max() == 0.0
            n = sphere.normal(cfg.positions)
            assert np.abs(np.einsum("ij,ij->i", psi, n)).max() < 1e-12
