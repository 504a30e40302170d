"""Brute-force validation of the caustic sheets.

The reflected rays form the two-parameter family F(u, v, lambda) = r + lambda b.
A focal (caustic) point is where neighboring rays meet to first order, i.e.
where the Jacobian of the family drops rank:

    det[ d_u F, d_v F, b ](lambda) = 0.

With d_u(r, b) and d_v(r, b) estimated by central finite differences, the
determinant is an explicit quadratic polynomial in lambda, so its two roots --
the signed focal distances along each ray -- come out in closed form.  None of
the fundamental-form machinery is touched, which makes this an independent
check of the curvature route.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .caustics import (EPS_GRAZING_DEFAULT, FLAG_VALID, CausticSheet,
                       GridSpec, IncidentField, incident_direction,
                       reflect_direction)
from .diffgeo import dot, norm
from .surfacelang import EvalDomainError, SurfaceAST, eval_surface

__all__ = [
    "RaySample", "ValidationReport", "GrazingIncidenceError",
    "reflected_ray", "focal_distances_bruteforce", "validate_sheets",
]

FD_STEP_DEFAULT = 1e-4
FD_STEP_RANGE = (1e-6, 1e-3)
VALIDATION_TOL_DEFAULT = 1e-4


class GrazingIncidenceError(ValueError):
    """The requested point is grazing or shadowed; no reflected ray exists."""


@dataclass
class RaySample:
    """One reflected ray: origin on the mirror, unit direction, parameter tag."""

    origin: np.ndarray
    direction: np.ndarray
    u: float
    v: float


def _ray_bundle(surface: SurfaceAST, field: IncidentField, U, V,
                eps_grazing: float = EPS_GRAZING_DEFAULT):
    """Vectorized rays with a lit-mask; silently masks degenerate points."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    jet = eval_surface(surface, U, V)
    r = jet.value()
    ru = jet.d_u()
    rv = jet.d_v()
    shape = np.broadcast_shapes(r.shape, ru.shape, rv.shape)
    r = np.broadcast_to(r, shape)
    ru = np.broadcast_to(ru, shape)
    rv = np.broadcast_to(rv, shape)

    c = np.cross(ru, rv)
    cn = norm(c)
    regular = cn >= 1e-12 * norm(ru) * norm(rv)
    with np.errstate(all="ignore"):
        n_raw = c / np.where(cn > 0.0, cn, 1.0)[..., None]
    a = incident_direction(field, r)
    side = dot(a, n_raw)
    flipped = side > 0.0
    n = np.where(flipped[..., None], -n_raw, n_raw)
    cos_theta = np.where(flipped, -side, side)
    b = reflect_direction(a, n)
    lit = regular & (np.abs(cos_theta) > eps_grazing)
    return r, b, lit, flipped


def reflected_ray(surface: SurfaceAST, field: IncidentField, u: float, v: float,
                  eps_grazing: float = EPS_GRAZING_DEFAULT) -> RaySample:
    """The reflected ray at a single lit parameter point."""
    r, b, lit, _ = _ray_bundle(surface, field, float(u), float(v), eps_grazing)
    if not bool(np.all(lit)):
        raise GrazingIncidenceError(f"no reflected ray at (u, v) = ({u}, {v}): "
                                    "grazing incidence or degenerate chart")
    return RaySample(np.asarray(r, dtype=float).reshape(3),
                     np.asarray(b, dtype=float).reshape(3), float(u), float(v))


def _bundle_or_mask(surface, field, U, V, eps_grazing):
    """Ray bundle that degrades to per-point evaluation on domain errors."""
    try:
        return _ray_bundle(surface, field, U, V, eps_grazing)
    except EvalDomainError:
        pass
    shape = np.broadcast_shapes(np.shape(U), np.shape(V))
    U = np.broadcast_to(np.asarray(U, dtype=float), shape)
    V = np.broadcast_to(np.asarray(V, dtype=float), shape)
    r = np.zeros(shape + (3,))
    b = np.zeros(shape + (3,))
    lit = np.zeros(shape, dtype=bool)
    flipped = np.zeros(shape, dtype=bool)
    for idx in np.ndindex(shape):
        try:
            ri, bi, li, fi = _ray_bundle(surface, field, U[idx], V[idx], eps_grazing)
        except EvalDomainError:
            continue
        r[idx], b[idx], lit[idx], flipped[idx] = ri, bi, li, fi
    return r, b, lit, flipped


def _focal_quadratic(surface, field, U, V, h, eps_grazing):
    """FD-assembled coefficients (c0, c1, c2) of det[d_u F, d_v F, b](lambda)."""
    r0, b0, lit0, flip0 = _bundle_or_mask(surface, field, U, V, eps_grazing)
    rpu, bpu, lpu, fpu = _bundle_or_mask(surface, field, U + h, V, eps_grazing)
    rmu, bmu, lmu, fmu = _bundle_or_mask(surface, field, U - h, V, eps_grazing)
    rpv, bpv, lpv, fpv = _bundle_or_mask(surface, field, U, V + h, eps_grazing)
    rmv, bmv, lmv, fmv = _bundle_or_mask(surface, field, U, V - h, eps_grazing)

    ok = lit0 & lpu & lmu & lpv & lmv
    # a stencil straddling an orientation fold would difference two normals of
    # opposite sign; treat such points as unusable rather than produce garbage
    consistent = (fpu == flip0) & (fmu == flip0) & (fpv == flip0) & (fmv == flip0)
    ok &= consistent

    inv2h = 1.0 / (2.0 * h)
    ru = (rpu - rmu) * inv2h
    rv = (rpv - rmv) * inv2h
    bu = (bpu - bmu) * inv2h
    bv = (bpv - bmv) * inv2h

    def det3(x, y, z):
        return dot(np.cross(x, y), z)

    c0 = det3(ru, rv, b0)
    c1 = det3(bu, rv, b0) + det3(ru, bv, b0)
    c2 = det3(bu, bv, b0)
    return (c0, c1, c2), r0, b0, ok


def _roots_of_focal_quadratic(c0, c1, c2):
    """Signed focal distances; infinite where the family does not focus.

    The true determinant always has real roots; a negative discriminant can
    only come from finite-difference noise at a near-double root, so it is
    clamped to the double root -c1/(2 c2).
    """
    c0 = np.asarray(c0, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    disc = np.maximum(c1 * c1 - 4.0 * c2 * c0, 0.0)
    sq = np.sqrt(disc)
    t = -0.5 * (c1 + np.copysign(sq, c1))
    with np.errstate(all="ignore"):
        lam_a = np.where(c2 != 0.0, t / np.where(c2 != 0.0, c2, 1.0), np.inf)
        lam_b = np.where(t != 0.0, c0 / np.where(t != 0.0, t, 1.0), np.inf)
        # t == 0 with a quadratic term means a double root at -c1/(2 c2)
        dbl = (t == 0.0) & (c2 != 0.0)
        lam_b = np.where(dbl, -0.5 * c1 / np.where(dbl, c2, 1.0), lam_b)
        none_ = (c2 == 0.0) & (c1 == 0.0)
        lam_a = np.where(none_, np.inf, lam_a)
        lam_b = np.where(none_, np.inf, lam_b)
    return lam_a, lam_b


def focal_distances_bruteforce(surface: SurfaceAST, field: IncidentField,
                               u: float, v: float, h: float = FD_STEP_DEFAULT,
                               eps_grazing: float = EPS_GRAZING_DEFAULT):
    """The two signed focal distances along the reflected ray at (u, v).

    Distances are the lambda-roots of the rank-drop determinant; either may be
    negative (virtual caustic behind the mirror) or infinite (no focusing).
    """
    lo, hi = FD_STEP_RANGE
    if not (lo <= h <= hi):
        raise ValueError(f"finite-difference step must lie in [{lo}, {hi}]")
    coeffs, _, _, ok = _focal_quadratic(surface, field, float(u), float(v), h, eps_grazing)
    if not bool(np.all(ok)):
        raise GrazingIncidenceError(
            f"focal distances undefined at (u, v) = ({u}, {v}): grazing point "
            "or finite-difference stencil left the chart")
    lam_a, lam_b = _roots_of_focal_quadratic(*coeffs)
    return float(lam_a), float(lam_b)


@dataclass
class ValidationReport:
    """Outcome of comparing closed-form sheets against the ray-envelope oracle."""

    nu: int
    nv: int
    fd_step: float
    tol: float
    max_radius: float
    n_points: int
    n_compared: int
    n_flag_disagreements: int
    max_error: float
    mean_error: float
    p50: float
    p90: float
    p99: float
    passed: bool

    def to_text(self) -> str:
        lines = [
            "oracle validation (ray-envelope rank drop vs closed form)",
            f"  grid:              {self.nu} x {self.nv} ({self.n_points} points per sheet)",
            f"  fd step:           {self.fd_step:.3e}",
            f"  tolerance:         {self.tol:.3e}",
            f"  caustic radius cap: {self.max_radius:.6g}",
            f"  compared:          {self.n_compared} sheet-points",
            f"  flag mismatches:   {self.n_flag_disagreements}",
        ]
        if self.n_compared:
            lines += [
                f"  max error:         {self.max_error:.6e}",
                f"  mean error:        {self.mean_error:.6e}",
                f"  p50/p90/p99:       {self.p50:.3e} / {self.p90:.3e} / {self.p99:.3e}",
            ]
        else:
            lines.append("  no mutually valid points to compare")
        lines.append(f"  result:            {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def validate_sheets(closed_form, surface: SurfaceAST, field: IncidentField,
                    grid: GridSpec, h: float = FD_STEP_DEFAULT,
                    tol: float = VALIDATION_TOL_DEFAULT,
                    max_radius: Optional[float] = None,
                    eps_grazing: float = EPS_GRAZING_DEFAULT) -> ValidationReport:
    """Compare two closed-form CausticSheets against the brute-force oracle.

    closed_form is the (sheet1, sheet2) pair computed on the same grid.  The
    error at a point is the distance between the closed-form caustic point and
    r + lambda_oracle * b after pairing the roots by least total difference.
    Points whose caustic lies beyond max_radius (default: 10 surface diameters)
    are excluded on both sides: far focal points amplify any derivative noise
    linearly with distance and carry no geometric information here.
    """
    sheet1, sheet2 = closed_form
    if sheet1.k_star.shape != (grid.nu, grid.nv) or sheet2.k_star.shape != (grid.nu, grid.nv):
        raise ValueError("closed-form sheets were not computed on the given grid")

    U, V = grid.mesh()
    coeffs, r0, b0, ok = _focal_quadratic(surface, field, U, V, h, eps_grazing)
    lam_a, lam_b = _roots_of_focal_quadratic(*coeffs)

    if max_radius is None:
        span = r0.reshape(-1, 3)
        max_radius = 10.0 * float(np.linalg.norm(span.max(axis=0) - span.min(axis=0)))
    max_radius = float(max_radius)

    def sheet_side(sheet: CausticSheet):
        with np.errstate(all="ignore"):
            radius = np.where(sheet.k_star != 0.0,
                              1.0 / np.where(sheet.k_star != 0.0, sheet.k_star, 1.0), np.inf)
        usable = ((sheet.flags & FLAG_VALID) != 0) & (np.abs(radius) <= max_radius)
        return radius, usable

    rad1, use1 = sheet_side(sheet1)
    rad2, use2 = sheet_side(sheet2)
    oracle_ok = ok[None] & (np.abs(np.stack([lam_a, lam_b])) <= max_radius) \
        & np.isfinite(np.stack([lam_a, lam_b]))

    # pair closed-form radii with oracle roots by least total |difference|
    with np.errstate(all="ignore"):
        cf = np.stack([rad1, rad2])
        orc = np.stack([lam_a, lam_b])
        keep = np.abs(cf[0] - orc[0]) + np.abs(cf[1] - orc[1])
        swap = np.abs(cf[0] - orc[1]) + np.abs(cf[1] - orc[0])
        swap_better = swap < keep
        orc = np.where(swap_better[None], orc[::-1], orc)
        oracle_ok = np.where(swap_better[None], oracle_ok[::-1], oracle_ok)

        cf_ok = np.stack([use1, use2])
        both = cf_ok & oracle_ok
        disagree = int(np.count_nonzero(cf_ok != oracle_ok))

        xi_cf = np.stack([sheet1.xi, sheet2.xi])
        xi_or = r0[None] + orc[..., None] * b0[None]
        err = np.linalg.norm(np.where(both[..., None], xi_cf - xi_or, 0.0), axis=-1)
    errors = err[both]

    n_compared = int(errors.size)
    if n_compared:
        max_err = float(errors.max())
        stats = (float(errors.mean()), *(float(np.percentile(errors, p)) for p in (50, 90, 99)))
        passed = max_err <= tol
    else:
        max_err = float("inf")
        stats = (float("inf"),) * 4
        passed = False
    return ValidationReport(
        nu=grid.nu, nv=grid.nv, fd_step=float(h), tol=float(tol), max_radius=max_radius,
        n_points=int(U.size), n_compared=n_compared, n_flag_disagreements=disagree,
        max_error=max_err, mean_error=stats[0], p50=stats[1], p90=stats[2], p99=stats[3],
        passed=passed,
    )
