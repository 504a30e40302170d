"""Caustic sheets of a reflected wavefront.

A flat front (unit direction a) or a spherical front (point source O) hits a
mirror surface r(u, v).  Each surface point reflects the ray into
b = a - 2(a, n) n, and the two focal sheets of the reflected front lie on the
reflected rays at xi = r + b / k*, where k* runs over the two roots of a
characteristic quadratic built from the mirror's curvature data:

    flat front:   mu^2 + p mu + q = 0,  mu = k*
    point source: same quadratic in mu = k* + 1/rho, rho = |r - O|

with p = 2 cos(theta) (2H + k_n(a_t) tan^2(theta)) and q = 4K.  Equivalently
k* are the eigenvalues of the Weingarten matrix of the reflected front at the
mirror, assembled from the modified fundamental forms

    g*_ij = g_ij - (d_i r, a)(d_j r, a)
    B*_ij = -2 cos(theta) B_ij            (flat)
    B*_ij = -2 cos(theta) B_ij - g*_ij / rho   (point source)

Both routes are computed and cross-checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .diffgeo import (FrameData, SurfaceForms, dot, frame_at,
                      fundamental_forms, norm)
from .surfacelang import SurfaceAST, eval_surface

__all__ = [
    "FlatFront", "PointSource", "IncidentField",
    "ReflectionData", "ModifiedForms", "CausticPoint", "CausticSheet",
    "FrontPoint", "GridSpec", "SheetStatistics", "FrontStatistics",
    "InternalConsistencyError", "SourceOnSurfaceError",
    "FLAG_VALID", "FLAG_SHADOW", "FLAG_GRAZING", "FLAG_AT_INFINITY",
    "FLAG_CLIPPED", "FLAG_EXCLUDED_ZERO_ROOT",
    "incident_direction", "reflect_direction", "reflection_data",
    "modified_forms", "caustic_coefficients", "solve_sheet_curvatures",
    "caustic_point", "reflected_front_point", "compute_caustic_sheets",
]

# per-vertex flag byte, shared with the mesh writer:
FLAG_VALID = 0x01               # bit 0
FLAG_SHADOW = 0x02              # bit 1
FLAG_GRAZING = 0x04             # bit 2
FLAG_AT_INFINITY = 0x08        # bit 3
FLAG_CLIPPED = 0x10             # bit 4
FLAG_EXCLUDED_ZERO_ROOT = 0x20  # bit 5

EPS_GRAZING_DEFAULT = 1e-6      # |cos theta| at or below this is grazing
EPS_INF_DEFAULT = 1e-9          # |k*| at or below this has no finite caustic point

# relative discriminant handling for the characteristic quadratic: round-off
# can push an analytically zero (double-root) discriminant slightly off zero,
# and taking sqrt of that noise would smear the roots by its square root.
_DISC_DOUBLE_RTOL = 2e-13       # |disc| below this times scale collapses to a double root
_DISC_NEGATIVE_RTOL = 1e-12     # disc below minus this times scale is an internal error
_EIG_CROSSCHECK_RTOL = 1e-8


class InternalConsistencyError(RuntimeError):
    """The two computation routes disagree; indicates a bug, not bad input."""


class SourceOnSurfaceError(ValueError):
    """The point source coincides with a surface point."""


@dataclass
class FlatFront:
    """Flat incident front: all rays travel along the unit direction a."""

    direction: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.direction, dtype=float).reshape(3)
        length = float(np.linalg.norm(a))
        if length == 0.0:
            raise ValueError("flat front direction must be non-zero")
        self.direction = a / length


@dataclass
class PointSource:
    """Spherical incident front emitted from the point O."""

    origin: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float).reshape(3)
        if not np.all(np.isfinite(o)):
            raise ValueError("point source position must be finite")
        self.origin = o


IncidentField = Union[FlatFront, PointSource]


def incident_direction(field: IncidentField, r) -> np.ndarray:
    """Unit incident direction at surface points r."""
    r = np.asarray(r, dtype=float)
    if isinstance(field, FlatFront):
        return np.broadcast_to(field.direction, r.shape).copy()
    d = r - field.origin
    dist = norm(d)
    if np.any(dist <= 1e-12):
        raise SourceOnSurfaceError("point source coincides with a surface point")
    return d / dist[..., None]


def reflect_direction(a, n) -> np.ndarray:
    """Mirror law: b = a - 2 (a, n) n."""
    a = np.asarray(a, dtype=float)
    n = np.asarray(n, dtype=float)
    return a - 2.0 * dot(a, n)[..., None] * n


@dataclass
class ReflectionData:
    """Incidence/reflection quantities at surface points."""

    a: np.ndarray            # unit incident direction
    cos_theta: np.ndarray    # (a, n); negative on lit points
    b: np.ndarray            # unit reflected direction
    a_t: np.ndarray          # tangential projection of a (3-vector)
    a_t_uv: np.ndarray       # same, contravariant (u,v)-components
    k_n_at: np.ndarray       # normal curvature along a_t (0 at normal incidence)
    B_at_at: np.ndarray      # B(a_t, a_t), well-behaved through normal incidence
    r_dist: Optional[np.ndarray]  # |r - O| for a point source, None for flat


def reflection_data(frame: FrameData, forms: SurfaceForms,
                    field: IncidentField) -> ReflectionData:
    a = incident_direction(field, frame.r)
    cos_theta = dot(a, frame.n)
    b = reflect_direction(a, frame.n)
    a_t = a - cos_theta[..., None] * frame.n

    # contravariant components of a_t: solve g X = w with w_i = (d_i r, a)
    w1 = dot(frame.r_u, a)
    w2 = dot(frame.r_v, a)
    X1 = (forms.g22 * w1 - forms.g12 * w2) / forms.det_g
    X2 = (forms.g11 * w2 - forms.g12 * w1) / forms.det_g
    a_t_uv = np.stack([X1, X2], axis=-1)

    BXX = forms.B11 * X1 * X1 + 2.0 * forms.B12 * X1 * X2 + forms.B22 * X2 * X2
    gXX = w1 * X1 + w2 * X2  # equals g(a_t, a_t) = sin^2(theta)
    with np.errstate(all="ignore"):
        k_n = np.where(gXX > 0.0, BXX / np.where(gXX > 0.0, gXX, 1.0), 0.0)

    r_dist = None
    if isinstance(field, PointSource):
        r_dist = norm(frame.r - field.origin)
    return ReflectionData(a, cos_theta, b, a_t, a_t_uv, k_n, BXX, r_dist)


@dataclass
class ModifiedForms:
    """Fundamental forms of the reflected front at the mirror."""

    gs11: np.ndarray
    gs12: np.ndarray
    gs22: np.ndarray
    Bs11: np.ndarray
    Bs12: np.ndarray
    Bs22: np.ndarray
    det_gs: np.ndarray
    weingarten: np.ndarray   # (..., 2, 2): A* for a flat front, W* for a point source


def modified_forms(forms: SurfaceForms, frame: FrameData, refl: ReflectionData,
                   field: IncidentField) -> ModifiedForms:
    """g*, B* and the Weingarten matrix of the reflected front.

    Valid away from grazing incidence (cos theta = 0), where g* degenerates;
    grid-level code masks those points before use.
    """
    w1 = dot(frame.r_u, refl.a)
    w2 = dot(frame.r_v, refl.a)
    gs11 = forms.g11 - w1 * w1
    gs12 = forms.g12 - w1 * w2
    gs22 = forms.g22 - w2 * w2
    det_gs = gs11 * gs22 - gs12 * gs12

    m = -2.0 * refl.cos_theta
    Bs11 = m * forms.B11
    Bs12 = m * forms.B12
    Bs22 = m * forms.B22

    with np.errstate(all="ignore"):
        inv = 1.0 / det_gs
        A11 = (gs22 * Bs11 - gs12 * Bs12) * inv
        A12 = (gs22 * Bs12 - gs12 * Bs22) * inv
        A21 = (gs11 * Bs12 - gs12 * Bs11) * inv
        A22 = (gs11 * Bs22 - gs12 * Bs12) * inv

    if isinstance(field, PointSource):
        with np.errstate(all="ignore"):
            shift = 1.0 / refl.r_dist
        Bs11 = Bs11 - shift * gs11
        Bs12 = Bs12 - shift * gs12
        Bs22 = Bs22 - shift * gs22
        A11 = A11 - shift
        A22 = A22 - shift

    wein = np.stack([np.stack([A11, A12], axis=-1),
                     np.stack([A21, A22], axis=-1)], axis=-2)
    return ModifiedForms(gs11, gs12, gs22, Bs11, Bs12, Bs22, det_gs, wein)


def caustic_coefficients(forms: SurfaceForms, refl: ReflectionData,
                         field: IncidentField):
    """Coefficients (p, q) of mu^2 + p mu + q = 0 on the front curvatures.

    mu = k* for a flat front and mu = k* + 1/|r - O| for a point source.
    The tangential term k_n(a_t) tan^2(theta) is computed as
    B(a_t, a_t)/cos^2(theta), its analytic continuation through normal
    incidence where a_t = 0.
    """
    c = refl.cos_theta
    with np.errstate(all="ignore"):
        p = 4.0 * forms.H * c + 2.0 * refl.B_at_at / c
    q = 4.0 * forms.K
    return p, q


def _stable_quadratic_roots(p, q):
    """Roots of mu^2 + p mu + q = 0, double-root aware.

    Returns (mu_a, mu_b, clamped) with NaN entries propagated; the pair is in
    no particular order.  Raises InternalConsistencyError for a discriminant
    that is negative beyond round-off, which a real shape operator cannot
    produce.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    scale = np.maximum(1.0, np.maximum(p * p, np.abs(q)))
    disc = p * p - 4.0 * q
    finite = np.isfinite(disc)
    bad = finite & (disc < -_DISC_NEGATIVE_RTOL * scale)
    if np.any(bad):
        worst = np.nanmin(np.where(bad, disc, np.inf))
        raise InternalConsistencyError(
            f"negative discriminant {worst:.3e} in the characteristic quadratic; "
            "the reflected front's shape operator should be diagonalizable")
    clamped = finite & (np.abs(disc) <= _DISC_DOUBLE_RTOL * scale)
    disc = np.where(clamped, 0.0, np.maximum(disc, 0.0))
    sq = np.sqrt(disc)
    t = -0.5 * (p + np.copysign(sq, p))
    with np.errstate(all="ignore"):
        mu_a = t
        mu_b = np.where(t != 0.0, q / np.where(t != 0.0, t, 1.0), 0.0)
        mu_b = np.where(clamped, mu_a, mu_b)  # a double root is one number
    mu_b = np.where(finite, mu_b, np.nan)
    return mu_a, mu_b, clamped


def solve_sheet_curvatures(mods: ModifiedForms, coeffs, field: IncidentField,
                           r_dist=None, lit_mask=None):
    """The two front principal curvatures k*, from the quadratic, cross-checked.

    Returns (k_a, k_b, residual): the unordered root pair per point and the
    worst disagreement between the quadratic roots and the eigenvalues of the
    Weingarten matrix.  The two routes share no arithmetic beyond the raw
    forms, so agreement validates both.
    """
    p, q = coeffs
    mu_a, mu_b, clamped = _stable_quadratic_roots(p, q)
    if isinstance(field, PointSource):
        with np.errstate(all="ignore"):
            shift = 1.0 / np.asarray(r_dist, dtype=float)
        k_a = mu_a - shift
        k_b = mu_b - shift
    else:
        k_a, k_b = mu_a, mu_b

    lit = np.isfinite(k_a) & np.isfinite(k_b)
    if lit_mask is not None:
        lit = lit & lit_mask

    residual = 0.0
    if np.any(lit):
        W = mods.weingarten[lit]
        eig = np.linalg.eigvals(W)
        if np.any(np.abs(eig.imag) > 1e-6 * np.maximum(1.0, np.abs(eig.real))):
            raise InternalConsistencyError(
                "complex eigenvalues of the reflected front's Weingarten matrix")
        eig = np.sort(eig.real, axis=-1)
        roots = np.sort(np.stack([k_a[lit], k_b[lit]], axis=-1), axis=-1)
        err = np.abs(roots - eig)
        tol = _EIG_CROSSCHECK_RTOL * np.maximum(1.0, np.abs(roots))
        # at a clamped (double-root) point the pair is only known to the
        # square root of the discriminant tolerance
        scale = np.maximum(1.0, np.maximum(p * p, np.abs(q)))[lit]
        tol += np.where(clamped[lit], np.sqrt(_DISC_DOUBLE_RTOL * scale), 0.0)[..., None]
        if np.any(err > tol):
            raise InternalConsistencyError(
                f"quadratic roots and Weingarten eigenvalues disagree by "
                f"{float(np.max(err)):.3e}")
        residual = float(np.max(err)) if err.size else 0.0
    return k_a, k_b, residual


@dataclass
class CausticPoint:
    """Caustic points xi = r + b/k* of one sheet, with validity flags."""

    k_star: np.ndarray
    radius: np.ndarray       # signed distance 1/k* along the reflected ray
    xi: np.ndarray
    sheet_id: int
    flags: np.ndarray        # uint8 bit field, see FLAG_* constants

    @property
    def valid(self):
        return (self.flags & FLAG_VALID) != 0

    @property
    def shadow(self):
        return (self.flags & FLAG_SHADOW) != 0

    @property
    def grazing(self):
        return (self.flags & FLAG_GRAZING) != 0

    @property
    def at_infinity(self):
        return (self.flags & FLAG_AT_INFINITY) != 0

    @property
    def excluded_zero_root(self):
        return (self.flags & FLAG_EXCLUDED_ZERO_ROOT) != 0


def caustic_point(r, b, k_star, *, field: IncidentField = None, sheet_id: int = 1,
                  eps_inf: float = EPS_INF_DEFAULT, base_flags=None) -> CausticPoint:
    """Place caustic points xi = r + b/k* and set validity flags.

    Roots with |k*| <= eps_inf have no finite caustic point: for a flat front
    they are flagged at_infinity, for a point source excluded_zero_root.
    base_flags (uint8) carries upstream shadow/grazing reasons.
    """
    r = np.asarray(r, dtype=float)
    b = np.asarray(b, dtype=float)
    k = np.asarray(k_star, dtype=float)
    shape = np.broadcast_shapes(k.shape, r.shape[:-1])
    k = np.broadcast_to(k, shape)

    flags = np.zeros(shape, dtype=np.uint8)
    if base_flags is not None:
        flags |= np.broadcast_to(np.asarray(base_flags, dtype=np.uint8), shape)

    finite_root = np.isfinite(k) & (np.abs(k) > eps_inf)
    no_point = np.isfinite(k) & ~finite_root
    zero_bit = FLAG_EXCLUDED_ZERO_ROOT if isinstance(field, PointSource) else FLAG_AT_INFINITY
    flags = flags | np.where(no_point, np.uint8(zero_bit), np.uint8(0))

    valid = finite_root & (flags == 0)
    flags = flags | np.where(valid, np.uint8(FLAG_VALID), np.uint8(0))

    with np.errstate(all="ignore"):
        radius = np.where(finite_root, 1.0 / np.where(finite_root, k, 1.0), np.inf)
        radius = np.where(np.isfinite(k), radius, np.nan)
        xi = np.where(valid[..., None], r + b * np.where(valid, radius, 0.0)[..., None], np.nan)
    return CausticPoint(k.copy(), radius, xi, sheet_id, flags)


@dataclass
class FrontPoint:
    """Reflected front samples rho = r + lambda b at total travel L."""

    lam: np.ndarray      # post-reflection travel; negative where not yet reached
    L: float
    rho: np.ndarray

    @property
    def arrived(self):
        return self.lam >= 0.0


def reflected_front_point(r, a, b, L, r_dist=None) -> FrontPoint:
    """Propagate the front: lambda = L - (r, a) (flat) or L - |r - O| (point).

    Points with lambda < 0 have not been reached by the front yet; consumers
    exclude them from export.
    """
    r = np.asarray(r, dtype=float)
    b = np.asarray(b, dtype=float)
    if r_dist is None:
        lam = L - dot(r, np.asarray(a, dtype=float))
    else:
        lam = L - np.asarray(r_dist, dtype=float)
    rho = r + lam[..., None] * b
    return FrontPoint(lam, float(L), rho)


# --------------------------------------------------------------------------
# grid-level computation
# --------------------------------------------------------------------------

@dataclass
class GridSpec:
    """A parameter grid: nu x nv samples of the rectangle [u0,u1] x [v0,v1]."""

    nu: int
    nv: int
    domain: tuple  # (u0, u1, v0, v1)

    def __post_init__(self):
        if self.nu < 2 or self.nv < 2:
            raise ValueError("grid needs at least 2 samples per direction")
        u0, u1, v0, v1 = map(float, self.domain)
        if not (u1 > u0 and v1 > v0):
            raise ValueError("grid domain rectangle is empty")
        self.domain = (u0, u1, v0, v1)

    def axes(self):
        u0, u1, v0, v1 = self.domain
        return np.linspace(u0, u1, self.nu), np.linspace(v0, v1, self.nv)

    def mesh(self):
        us, vs = self.axes()
        return np.meshgrid(us, vs, indexing="ij")


@dataclass
class CausticSheet:
    """One caustic sheet sampled over a parameter grid."""

    sheet_id: int
    u: np.ndarray            # (nu,)
    v: np.ndarray            # (nv,)
    k_star: np.ndarray       # (nu, nv)
    xi: np.ndarray           # (nu, nv, 3)
    flags: np.ndarray        # (nu, nv) uint8

    @property
    def valid(self):
        return (self.flags & FLAG_VALID) != 0


@dataclass
class SheetStatistics:
    sheet_id: int
    n_valid: int
    n_at_infinity: int
    n_excluded_zero_root: int
    bbox_min: Optional[np.ndarray]
    bbox_max: Optional[np.ndarray]
    diameter: float
    principal_extents: Optional[np.ndarray]


@dataclass
class FrontStatistics:
    """Counts, bounding boxes and degeneracy measures for both sheets."""

    nu: int
    nv: int
    n_points: int
    n_shadow: int
    n_grazing: int
    surface_bbox_min: np.ndarray
    surface_bbox_max: np.ndarray
    surface_diameter: float
    sheets: tuple

    @property
    def empty(self) -> bool:
        return all(s.n_valid == 0 for s in self.sheets)

    def to_text(self) -> str:
        lines = [
            f"grid: {self.nu} x {self.nv} ({self.n_points} points)",
            f"shadow points: {self.n_shadow}",
            f"grazing points: {self.n_grazing}",
            f"surface bbox min: {_fmt_vec(self.surface_bbox_min)}",
            f"surface bbox max: {_fmt_vec(self.surface_bbox_max)}",
            f"surface diameter: {self.surface_diameter:.9g}",
        ]
        for s in self.sheets:
            head = f"sheet {s.sheet_id}"
            lines.append(f"{head}: valid {s.n_valid}, at_infinity {s.n_at_infinity}, "
                         f"excluded_zero_root {s.n_excluded_zero_root}")
            if s.n_valid:
                lines.append(f"{head} bbox min: {_fmt_vec(s.bbox_min)}")
                lines.append(f"{head} bbox max: {_fmt_vec(s.bbox_max)}")
                lines.append(f"{head} bbox diameter: {s.diameter:.9g}")
                lines.append(f"{head} principal extents: {_fmt_vec(s.principal_extents)}")
            else:
                lines.append(f"{head}: no caustic (no valid points)")
        return "\n".join(lines) + "\n"


def _fmt_vec(x) -> str:
    return " ".join(f"{float(c):.9g}" for c in np.asarray(x).ravel())


def _sheet_statistics(sheet: CausticSheet) -> SheetStatistics:
    valid = sheet.valid
    n_inf = int(np.count_nonzero(sheet.flags & FLAG_AT_INFINITY))
    n_zero = int(np.count_nonzero(sheet.flags & FLAG_EXCLUDED_ZERO_ROOT))
    if not np.any(valid):
        return SheetStatistics(sheet.sheet_id, 0, n_inf, n_zero, None, None, 0.0, None)
    pts = sheet.xi[valid]
    bb_min = pts.min(axis=0)
    bb_max = pts.max(axis=0)
    diameter = float(np.linalg.norm(bb_max - bb_min))
    centered = pts - pts.mean(axis=0)
    if pts.shape[0] >= 2:
        # principal-component extents flag degeneracy to a curve or a point
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        proj = centered @ vt.T
        extents = proj.max(axis=0) - proj.min(axis=0)
        if extents.shape[0] < 3:
            extents = np.pad(extents, (0, 3 - extents.shape[0]))
    else:
        extents = np.zeros(3)
    return SheetStatistics(sheet.sheet_id, int(np.count_nonzero(valid)), n_inf, n_zero,
                           bb_min, bb_max, diameter, extents)


def _order_roots_by_continuity(k_a, k_b, usable):
    """Assign the unordered root pairs to two sheets.

    Per grid row, roots are matched to the previous point's assignment by
    nearest value; each row starts from an ascending pair.  This prevents
    sheet-swapping artifacts where the root curves cross.
    """
    lo = np.minimum(k_a, k_b)
    hi = np.maximum(k_a, k_b)
    s1 = np.full_like(k_a, np.nan)
    s2 = np.full_like(k_a, np.nan)
    nu, nv = k_a.shape
    for i in range(nu):
        prev = None
        for j in range(nv):
            if not usable[i, j]:
                continue
            x, y = lo[i, j], hi[i, j]
            if prev is None:
                first, second = x, y
            else:
                keep = abs(x - prev[0]) + abs(y - prev[1])
                swap = abs(y - prev[0]) + abs(x - prev[1])
                first, second = (x, y) if keep <= swap else (y, x)
            s1[i, j] = first
            s2[i, j] = second
            prev = (first, second)
    return s1, s2


def compute_caustic_sheets(surface: SurfaceAST, field: IncidentField, grid: GridSpec,
                           *, eps_grazing: float = EPS_GRAZING_DEFAULT,
                           eps_inf: float = EPS_INF_DEFAULT):
    """Both caustic sheets of the reflected front over a parameter grid.

    Returns (sheet1, sheet2, statistics).  Shadowed and grazing points are
    masked, not errors; roots without a finite caustic point are flagged.
    The flat-front result is independent of any front offset by construction
    (no travel parameter enters the computation).
    """
    us, vs = grid.axes()
    U, V = grid.mesh()
    jet = eval_surface(surface, U, V)

    # orientation hint needs the incident direction, which needs positions
    r = jet.value()
    a = incident_direction(field, r)
    frame = frame_at(jet, a)
    forms = fundamental_forms(frame)
    refl = reflection_data(frame, forms, field)

    grazing = np.abs(refl.cos_theta) <= eps_grazing
    shadow = refl.cos_theta > eps_grazing
    lit = ~grazing & ~shadow

    base_flags = np.zeros(U.shape, dtype=np.uint8)
    base_flags |= np.where(grazing, np.uint8(FLAG_GRAZING), np.uint8(0))
    base_flags |= np.where(shadow, np.uint8(FLAG_SHADOW), np.uint8(0))

    mods = modified_forms(forms, frame, refl, field)
    p, q = caustic_coefficients(forms, refl, field)
    p = np.where(lit, p, np.nan)
    q = np.where(lit, q, np.nan)
    k_a, k_b, _ = solve_sheet_curvatures(mods, (p, q), field, refl.r_dist, lit)

    k1, k2 = _order_roots_by_continuity(k_a, k_b, lit)
    sheets = []
    for sheet_id, k in ((1, k1), (2, k2)):
        cp = caustic_point(frame.r, refl.b, k, field=field, sheet_id=sheet_id,
                           eps_inf=eps_inf, base_flags=base_flags)
        sheets.append(CausticSheet(sheet_id, us, vs, cp.k_star, cp.xi, cp.flags))

    surf_min = r.reshape(-1, 3).min(axis=0)
    surf_max = r.reshape(-1, 3).max(axis=0)
    stats = FrontStatistics(
        nu=grid.nu, nv=grid.nv, n_points=int(U.size),
        n_shadow=int(np.count_nonzero(shadow)),
        n_grazing=int(np.count_nonzero(grazing)),
        surface_bbox_min=surf_min, surface_bbox_max=surf_max,
        surface_diameter=float(np.linalg.norm(surf_max - surf_min)),
        sheets=(_sheet_statistics(sheets[0]), _sheet_statistics(sheets[1])),
    )
    return sheets[0], sheets[1], stats
