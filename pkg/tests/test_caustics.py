"""Reflection law, modified forms, characteristic quadratic, caustic points."""

import inspect

import numpy as np
import pytest

from catacaustics import (FlatFront, GridSpec, PointSource, build_surface,
                          caustic_coefficients, caustic_point,
                          compute_caustic_sheets, eval_surface, frame_at,
                          fundamental_forms, incident_direction,
                          modified_forms, parse_surface, reflect_direction,
                          reflected_front_point, reflection_data,
                          solve_sheet_curvatures)
from catacaustics.caustics import (FLAG_AT_INFINITY, FLAG_EXCLUDED_ZERO_ROOT,
                                   InternalConsistencyError,
                                   SourceOnSurfaceError,
                                   _stable_quadratic_roots)
from conftest import random_field, random_graph_surface

SPHERE = "[cos(u)*cos(v), cos(u)*sin(v), sin(u)]"
AXIAL = FlatFront((0.0, 0.0, 1.0))


def _pipeline(text, field, u, v, params=None):
    jet = eval_surface(parse_surface(text, params), u, v)
    r = jet.value()
    a = incident_direction(field, r)
    frame = frame_at(jet, a)
    forms = fundamental_forms(frame)
    refl = reflection_data(frame, forms, field)
    return frame, forms, refl


class TestIncidentDirection:
    def test_flat_is_constant(self):
        a = incident_direction(AXIAL, np.array([3.0, -1.0, 2.0]))
        assert np.allclose(a, [0, 0, 1])

    def test_point_source_at_origin_on_unit_sphere(self):
        r = np.array([np.cos(0.5), 0.0, np.sin(0.5)])
        a = incident_direction(PointSource((0, 0, 0)), r)
        assert np.allclose(a, r, atol=1e-15)

    def test_point_source_off_origin(self):
        a = incident_direction(PointSource((0, 0, 0.1)), np.array([0.0, 0.0, 1.0]))
        assert np.allclose(a, [0, 0, 1])

    def test_source_on_surface_is_error(self):
        with pytest.raises(SourceOnSurfaceError):
            incident_direction(PointSource((1, 2, 3)), np.array([1.0, 2.0, 3.0]))


class TestReflectDirection:
    def test_retro_reflection(self):
        b = reflect_direction((0.0, 0.0, 1.0), (0.0, 0.0, -1.0))
        assert np.allclose(b, [0, 0, -1])

    def test_sphere_point(self):
        u = np.pi / 6
        n = -np.array([np.cos(u), 0, np.sin(u)])
        b = reflect_direction((0.0, 0.0, 1.0), n)
        assert np.allclose(b, [-np.sqrt(3) / 2, 0, 0.5], atol=1e-15)

    def test_translation_surface_closed_form(self):
        # graph z = f(u) + h(v):  b = (2 f', 2 h', -1 + f'^2 + h'^2) / (1 + f'^2 + h'^2)
        field = AXIAL
        for u, v in [(0.4, -0.8), (1.0, 1.0), (-0.3, 0.2)]:
            frame, forms, refl = _pipeline("[u, v, u^2/2 + v^3/3]", field, u, v)
            fx, hy = u, v * v
            W2 = 1.0 + fx**2 + hy**2
            want = np.array([2 * fx, 2 * hy, -1 + fx**2 + hy**2]) / W2
            assert np.allclose(refl.b, want, atol=1e-14)

    def test_reflection_law_properties(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            a = rng.normal(size=3)
            a /= np.linalg.norm(a)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            if a @ n >= 0:
                n = -n
            b = reflect_direction(a, n)
            assert abs(np.linalg.norm(b) - 1) <= 1e-12
            assert abs(b @ n + a @ n) <= 1e-12
            assert abs(np.linalg.det(np.stack([a, b, n]))) <= 1e-12  # coplanar


class TestModifiedForms:
    def test_hyperbolic_paraboloid_displayed_forms(self):
        for u, v in [(1.0, 1.0), (0.5, -1.5), (-2.0, 0.3)]:
            frame, forms, refl = _pipeline("[u, v, u^2/2 - v^2/2]", AXIAL, u, v)
            mods = modified_forms(forms, frame, refl, AXIAL)
            assert np.allclose([mods.gs11, mods.gs12, mods.gs22], [1.0, 0.0, 1.0], atol=1e-13)
            W2 = 1.0 + u**2 + v**2
            assert mods.Bs11 == pytest.approx(-2.0 / W2, rel=1e-12)
            assert mods.Bs22 == pytest.approx(+2.0 / W2, rel=1e-12)
            assert mods.Bs12 == pytest.approx(0.0, abs=1e-13)

    def test_plane_mirror_keeps_rays_parallel(self):
        frame, forms, refl = _pipeline("[u, v, 0]", FlatFront((0.2, 0.1, -1.0)), 0.7, 0.7)
        mods = modified_forms(forms, frame, refl, FlatFront((0.2, 0.1, -1.0)))
        assert np.allclose([mods.Bs11, mods.Bs12, mods.Bs22], 0.0, atol=1e-15)

    def test_central_source_sphere_weingarten_is_identity(self):
        field = PointSource((0.0, 0.0, 0.0))
        frame, forms, refl = _pipeline(SPHERE, field, 0.7, 0.4)
        mods = modified_forms(forms, frame, refl, field)
        assert np.allclose(mods.weingarten, np.eye(2), atol=1e-12)

    def test_det_identity_random_points(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            ast = random_graph_surface(rng)
            field = random_field(rng)
            u, v = rng.uniform(-0.9, 0.9, size=2)
            jet = eval_surface(ast, u, v)
            a = incident_direction(field, jet.value())
            frame = frame_at(jet, a)
            forms = fundamental_forms(frame)
            refl = reflection_data(frame, forms, field)
            mods = modified_forms(forms, frame, refl, field)
            want = forms.det_g * refl.cos_theta**2
            assert mods.det_gs == pytest.approx(want, rel=1e-10)


class TestCausticCoefficients:
    def test_sphere_half_angle(self):
        u = np.pi / 6  # cos theta = -1/2
        frame, forms, refl = _pipeline(SPHERE, AXIAL, u, 0.0)
        p, q = caustic_coefficients(forms, refl, AXIAL)
        assert p == pytest.approx(-5.0, rel=1e-12)
        assert q == pytest.approx(4.0, rel=1e-12)

    def test_cylinder_has_zero_constant_term(self):
        field = FlatFront((1.0, 0.0, 0.0))
        frame, forms, refl = _pipeline("[cos(u), sin(u), v]", field, 0.4, 0.2)
        p, q = caustic_coefficients(forms, refl, field)
        assert q == 0.0
        assert p == pytest.approx(2.0 / refl.cos_theta, rel=1e-12)

    def test_central_source_sphere(self):
        field = PointSource((0.0, 0.0, 0.0))
        frame, forms, refl = _pipeline(SPHERE, field, 0.9, 2.2)
        p, q = caustic_coefficients(forms, refl, field)
        assert p == pytest.approx(-4.0, rel=1e-12)
        assert q == pytest.approx(4.0, rel=1e-12)


class TestSolveSheetCurvatures:
    def test_sphere_roots_and_product_identity(self):
        u = np.pi / 6
        frame, forms, refl = _pipeline(SPHERE, AXIAL, u, 0.0)
        mods = modified_forms(forms, frame, refl, AXIAL)
        coeffs = caustic_coefficients(forms, refl, AXIAL)
        k_a, k_b, residual = solve_sheet_curvatures(mods, coeffs, AXIAL)
        assert sorted([float(k_a), float(k_b)]) == pytest.approx([1.0, 4.0], rel=1e-12)
        assert float(k_a) * float(k_b) == pytest.approx(4.0 * float(forms.K), rel=1e-12)
        assert residual <= 1e-8

    def test_negative_discriminant_is_internal_error(self):
        with pytest.raises(InternalConsistencyError):
            _stable_quadratic_roots(0.0, 1.0)  # mu^2 + 1 = 0

    def test_double_root_collapses_cleanly(self):
        mu_a, mu_b, clamped = _stable_quadratic_roots(-4.0 + 1e-15, 4.0 - 1e-15)
        assert clamped
        assert mu_a == mu_b == pytest.approx(2.0, rel=1e-14)


class TestCausticPoint:
    def test_sphere_sheet_points(self):
        u = np.pi / 6
        r = np.array([np.cos(u), 0.0, np.sin(u)])
        b = np.array([-np.sqrt(3) / 2, 0.0, 0.5])
        cp1 = caustic_point(r, b, 1.0, sheet_id=1)
        assert np.allclose(cp1.xi, [0, 0, 1], atol=1e-15)
        cp2 = caustic_point(r, b, 4.0, sheet_id=2)
        assert np.allclose(cp2.xi, [3 * np.sqrt(3) / 8, 0, 5 / 8], atol=1e-15)
        assert cp1.valid.all() if cp1.valid.shape else cp1.valid

    def test_hyperbolic_paraboloid_both_sheets(self):
        field = AXIAL
        frame, forms, refl = _pipeline("[u, v, u^2/2 - v^2/2]", field, 1.0, 1.0)
        mods = modified_forms(forms, frame, refl, field)
        k_a, k_b, _ = solve_sheet_curvatures(mods, caustic_coefficients(forms, refl, field), field)
        lo, hi = sorted([float(k_a), float(k_b)])
        xi_lo = caustic_point(frame.r, refl.b, lo).xi
        xi_hi = caustic_point(frame.r, refl.b, hi).xi
        assert np.allclose(xi_lo, [0, 2, -0.5], atol=1e-13)
        assert np.allclose(xi_hi, [2, 0, 0.5], atol=1e-13)

    def test_zero_root_flags_by_field_kind(self):
        r = np.zeros(3)
        b = np.array([0.0, 0.0, 1.0])
        flat = caustic_point(r, b, 1e-12, field=FlatFront((0, 0, 1)))
        assert flat.at_infinity and not flat.valid
        assert np.isinf(flat.radius)
        point = caustic_point(r, b, 1e-12, field=PointSource((0, 0, 5)))
        assert point.excluded_zero_root and not point.valid


class TestReflectedFrontPoint:
    def test_front_touches_mirror_at_launch(self):
        r = np.array([0.3, 0.4, 0.5])
        a = np.array([0.0, 0.0, 1.0])
        fp = reflected_front_point(r, a, np.array([1.0, 0.0, 0.0]), L=float(r[2]))
        assert fp.lam == 0.0
        assert np.allclose(fp.rho, r)

    def test_sphere_front_at_L_1_5(self):
        u = np.pi / 6
        r = np.array([np.cos(u), 0.0, np.sin(u)])
        b = np.array([-np.sqrt(3) / 2, 0.0, 0.5])
        fp = reflected_front_point(r, (0.0, 0.0, 1.0), b, L=1.5)
        assert fp.lam == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(fp.rho, [0, 0, 1], atol=1e-15)

    def test_plane_mirror_re_emits_flat_front(self):
        us = np.linspace(-1, 1, 5)
        U, V = np.meshgrid(us, us, indexing="ij")
        jet = eval_surface(parse_surface("[u, v, 0]"), U, V)
        r = jet.value()
        a = np.array([0.0, 0.0, -1.0])
        frame = frame_at(jet, a)
        b = reflect_direction(np.broadcast_to(a, r.shape), frame.n)
        fp = reflected_front_point(r, a, b, L=2.0)
        assert np.allclose(fp.rho[..., 2], 2.0)
        assert np.all(fp.arrived)

    def test_not_arrived_is_flagged_not_raised(self):
        fp = reflected_front_point(np.array([0.0, 0.0, 5.0]), (0.0, 0.0, 1.0),
                                   np.array([0.0, 0.0, -1.0]), L=1.0)
        assert not fp.arrived


class TestComputeCausticSheets:
    def test_hemisphere_axis_line_degeneracy(self):
        ast, _ = build_surface("sphere")
        grid = GridSpec(30, 30, (0.2, 1.4, 0.0, 6.283185307179586))
        s1, s2, stats = compute_caustic_sheets(ast, AXIAL, grid)
        ext = stats.sheets[0].bbox_max - stats.sheets[0].bbox_min
        assert ext[0] < 1e-9 and ext[1] < 1e-9
        assert stats.sheets[0].principal_extents[1] < 1e-9

    def test_elliptic_paraboloid_focal_point(self):
        ast, dom = build_surface("elliptic-paraboloid")
        grid = GridSpec(25, 25, dom)
        s1, s2, stats = compute_caustic_sheets(ast, AXIAL, grid)
        for s in stats.sheets:
            assert s.diameter < 1e-9
        assert np.allclose(s1.xi[s1.valid], [0, 0, 0.5], atol=1e-12)

    def test_central_source_sphere_collapses_to_origin(self):
        ast, _ = build_surface("sphere")
        grid = GridSpec(20, 20, (0.2, 1.4, 0.0, 6.283185307179586))
        s1, s2, stats = compute_caustic_sheets(ast, PointSource((0, 0, 0)), grid)
        assert np.nanmax(np.abs(s1.xi)) < 1e-12
        assert np.nanmax(np.abs(s2.xi)) < 1e-12

    def test_cylinder_one_sheet_at_infinity(self):
        ast, dom = build_surface("cylinder")
        grid = GridSpec(15, 8, dom)
        s1, s2, stats = compute_caustic_sheets(ast, FlatFront((1.0, 0.0, 0.0)), grid)
        flat_sheet, finite_sheet = (s1, s2) if np.all(s1.flags & FLAG_AT_INFINITY) else (s2, s1)
        assert np.all(flat_sheet.flags & FLAG_AT_INFINITY)
        assert np.all(finite_sheet.valid)

    def test_grazing_points_masked_not_errors(self):
        # plane lit edge-on: every point grazes
        ast = parse_surface("[u, v, 0]")
        grid = GridSpec(5, 5, (-1, 1, -1, 1))
        s1, s2, stats = compute_caustic_sheets(ast, FlatFront((1.0, 0.0, 0.0)), grid)
        assert stats.n_grazing == 25
        assert stats.empty

    def test_compute_path_never_reads_a_travel_distance(self):
        # flat-front caustics are independent of the front offset; the API
        # enforces it by not accepting one
        sig = inspect.signature(compute_caustic_sheets)
        assert "L" not in sig.parameters
        assert not any("travel" in name for name in sig.parameters)

    def test_point_source_zero_roots_excluded(self):
        # source at the cylinder axis: the trivial root k* = -1/r is valid,
        # but a source placed on the surface of symmetry the sphere collapses;
        # here check the excluded flag never co-occurs with valid
        ast, dom = build_surface("cylinder")
        grid = GridSpec(12, 6, dom)
        s1, s2, _ = compute_caustic_sheets(ast, PointSource((0.2, 0.0, 0.5)), grid)
        for s in (s1, s2):
            assert not np.any(s.valid & ((s.flags & FLAG_EXCLUDED_ZERO_ROOT) != 0))


class TestRootIdentities:
    def test_flat_front_sum_and_product(self):
        rng = np.random.default_rng(31)
        for _ in range(40):
            ast = random_graph_surface(rng)
            field = FlatFront((rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 1.0))
            u, v = rng.uniform(-0.9, 0.9, size=2)
            jet = eval_surface(ast, u, v)
            a = incident_direction(field, jet.value())
            frame = frame_at(jet, a)
            forms = fundamental_forms(frame)
            refl = reflection_data(frame, forms, field)
            mods = modified_forms(forms, frame, refl, field)
            p, q = caustic_coefficients(forms, refl, field)
            k_a, k_b, _ = solve_sheet_curvatures(mods, (p, q), field)
            K = float(forms.K)
            assert abs(float(k_a * k_b) - 4 * K) <= 1e-9 * max(1.0, abs(K))
            assert abs(float(k_a + k_b) + float(p)) <= 1e-9 * max(1.0, abs(float(p)))
            # B(a_t, a_t) = k_n(a_t) sin^2(theta) away from normal incidence
            s2 = 1.0 - float(refl.cos_theta) ** 2
            if s2 > 1e-2:
                assert float(refl.B_at_at) == pytest.approx(
                    float(refl.k_n_at) * s2, rel=1e-9, abs=1e-12)
