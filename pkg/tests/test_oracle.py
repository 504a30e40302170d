"""Brute-force ray-envelope oracle and sheet validation."""

import numpy as np
import pytest

from catacaustics import (FlatFront, GridSpec, PointSource, build_surface,
                          compute_caustic_sheets, focal_distances_bruteforce,
                          parse_surface, reflected_ray, validate_sheets)
from catacaustics.oracle import (GrazingIncidenceError, _focal_quadratic,
                                 _roots_of_focal_quadratic)
from conftest import (GRAPH_DOMAIN, random_field, random_graph_surface)

SPHERE_TEXT = "[cos(u)*cos(v), cos(u)*sin(v), sin(u)]"
AXIAL = FlatFront((0.0, 0.0, 1.0))


class TestReflectedRay:
    def test_sphere_point(self):
        ast = parse_surface(SPHERE_TEXT)
        ray = reflected_ray(ast, AXIAL, np.pi / 6, 0.0)
        assert np.allclose(ray.origin, [np.sqrt(3) / 2, 0, 0.5], atol=1e-15)
        assert np.allclose(ray.direction, [-np.sqrt(3) / 2, 0, 0.5], atol=1e-15)

    def test_plane_normal_incidence_retroreflects(self):
        ast = parse_surface("[u, v, 0]")
        ray = reflected_ray(ast, FlatFront((0, 0, -1)), 0.2, 0.7)
        assert np.allclose(ray.direction, [0, 0, 1])

    def test_central_source_reflects_back(self):
        ast = parse_surface(SPHERE_TEXT)
        ray = reflected_ray(ast, PointSource((0, 0, 0)), 0.8, 1.0)
        assert np.allclose(ray.direction, -ray.origin, atol=1e-14)

    def test_grazing_raises(self):
        ast = parse_surface("[u, v, 0]")
        with pytest.raises(GrazingIncidenceError):
            reflected_ray(ast, FlatFront((1, 0, 0)), 0.0, 0.0)


class TestFocalDistances:
    def test_sphere_matches_inverse_roots(self):
        ast = parse_surface(SPHERE_TEXT)
        lam = sorted(focal_distances_bruteforce(ast, AXIAL, np.pi / 6, 0.0, h=1e-4))
        assert lam[0] == pytest.approx(0.25, abs=1e-5)
        assert lam[1] == pytest.approx(1.0, abs=1e-5)

    def test_plane_mirror_never_focuses(self):
        ast = parse_surface("[u, v, 0]")
        lam = focal_distances_bruteforce(ast, AXIAL, 0.1, 0.2)
        assert np.isinf(lam[0]) and np.isinf(lam[1])

    def test_central_source_focuses_at_origin(self):
        ast = parse_surface(SPHERE_TEXT)
        lam = focal_distances_bruteforce(ast, PointSource((0, 0, 0)), 0.7, 0.3)
        assert lam[0] == pytest.approx(1.0, abs=1e-5)
        assert lam[1] == pytest.approx(1.0, abs=1e-5)

    def test_step_outside_allowed_range(self):
        ast = parse_surface(SPHERE_TEXT)
        with pytest.raises(ValueError):
            focal_distances_bruteforce(ast, AXIAL, 0.5, 0.5, h=0.1)

    def test_vieta_self_consistency(self):
        rng = np.random.default_rng(17)
        checked = 0
        while checked < 30:
            ast = random_graph_surface(rng)
            field = random_field(rng)
            U = rng.uniform(-0.8, 0.8)
            V = rng.uniform(-0.8, 0.8)
            coeffs, _, _, ok = _focal_quadratic(ast, field, U, V, 1e-4, 1e-6)
            c0, c1, c2 = (float(c) for c in coeffs)
            if not bool(ok) or abs(c2) < 1e-12 or c1 * c1 - 4 * c2 * c0 <= 0:
                continue
            lam_a, lam_b = _roots_of_focal_quadratic(c0, c1, c2)
            assert float(lam_a * lam_b) * c2 == pytest.approx(c0, rel=1e-12)
            checked += 1


class TestValidateSheets:
    def _validate(self, name_or_text, field, grid=None, params=None, **kw):
        if name_or_text.startswith("["):
            ast, dom = parse_surface(name_or_text, params), GRAPH_DOMAIN
        else:
            ast, dom = build_surface(name_or_text, params)
        grid = grid or GridSpec(25, 25, dom)
        sheets = compute_caustic_sheets(ast, field, grid)[:2]
        return validate_sheets(sheets, ast, field, grid, **kw)

    def test_sphere_axial(self):
        report = self._validate("sphere", AXIAL, GridSpec(30, 30, (0.2, 1.4, 0.0, 6.2831853)))
        assert report.passed
        assert report.max_error <= 1e-4
        assert report.n_flag_disagreements == 0

    def test_hyperbolic_paraboloid(self):
        report = self._validate("hyperbolic-paraboloid", AXIAL)
        assert report.passed

    def test_random_translation_surface_against_displayed_general_form(self):
        # independent golden: for z = f(u) + h(v) under an axial front the
        # sheets are r - (1/(2 f'')) w and r - (1/(2 h'')) w with
        # w = (2 f', 2 h', -1 + f'^2 + h'^2)
        rng = np.random.default_rng(23)
        c1, c2 = rng.uniform(0.4, 0.9), rng.uniform(-0.9, -0.4)
        params = {"c1": c1, "c2": c2}
        text = "[u, v, c1*u^2 + c2*v^2]"
        ast = parse_surface(text, params)
        grid = GridSpec(21, 21, GRAPH_DOMAIN)
        s1, s2, _ = compute_caustic_sheets(ast, AXIAL, grid)
        U, V = grid.mesh()
        fx, hy = 2 * c1 * U, 2 * c2 * V
        fxx, hyy = 2 * c1, 2 * c2
        w = np.stack([2 * fx, 2 * hy, -1 + fx**2 + hy**2], axis=-1)
        r = np.stack([U, V, c1 * U**2 + c2 * V**2], axis=-1)
        xi_f = r - w / (2 * fxx)
        xi_h = r - w / (2 * hyy)
        # match computed sheets to the displayed pair point-by-point
        d_keep = np.linalg.norm(s1.xi - xi_f, axis=-1) + np.linalg.norm(s2.xi - xi_h, axis=-1)
        d_swap = np.linalg.norm(s1.xi - xi_h, axis=-1) + np.linalg.norm(s2.xi - xi_f, axis=-1)
        assert np.all(np.minimum(d_keep, d_swap) <= 2e-9)
        report = validate_sheets((s1, s2), ast, AXIAL, grid)
        assert report.passed

    def test_ellipsoid_interior_point_source(self):
        report = self._validate("ellipsoid", PointSource((0.05, -0.03, 0.08)))
        assert report.passed

    def test_cylinder_flat_front_flags_agree(self):
        report = self._validate("cylinder", FlatFront((1.0, 0.0, 0.0)),
                                GridSpec(15, 6, (-1.2, 1.2, 0.0, 1.0)))
        assert report.passed
        assert report.n_flag_disagreements == 0

    def test_unreachable_tolerance_fails(self):
        report = self._validate("sphere", AXIAL,
                                GridSpec(10, 10, (0.2, 1.4, 0.0, 6.2831853)), tol=0.0)
        assert not report.passed

    def test_grid_mismatch_is_error(self):
        ast, dom = build_surface("sphere")
        grid = GridSpec(10, 10, dom)
        sheets = compute_caustic_sheets(ast, AXIAL, grid)[:2]
        other = GridSpec(11, 10, dom)
        with pytest.raises(ValueError):
            validate_sheets(sheets, ast, AXIAL, other)

    def test_convergence_is_second_order(self):
        rng = np.random.default_rng(29)
        ast = random_graph_surface(rng)
        field = FlatFront((0.1, -0.05, 1.0))
        grid = GridSpec(15, 15, GRAPH_DOMAIN)
        sheets = compute_caustic_sheets(ast, field, grid)[:2]
        errs = [validate_sheets(sheets, ast, field, grid, h=h).max_error
                for h in (8e-4, 4e-4, 2e-4)]
        floor = 1e-9
        for big, small in zip(errs, errs[1:]):
            assert small <= big / 3.0 + floor, errs

    def test_report_text_is_stable(self):
        report = self._validate("sphere", AXIAL, GridSpec(8, 8, (0.2, 1.4, 0.0, 6.2831853)))
        text = report.to_text()
        assert "PASS" in text
        assert text == self._validate("sphere", AXIAL,
                                      GridSpec(8, 8, (0.2, 1.4, 0.0, 6.2831853))).to_text()
