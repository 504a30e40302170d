"""Pointwise differential geometry of a parametric surface.

Everything here is vectorized: inputs may carry arbitrary leading batch axes
(a full parameter grid is one call).  Conventions used throughout:

* the unit normal n is oriented per evaluation so that the incident direction
  satisfies (a, n) <= 0 (the mirror faces the light);
* the second fundamental form is B_ij = (d_i d_j r, n), which makes the unit
  sphere with inward normal have principal curvatures +1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jet2Vec3

__all__ = [
    "FrameData", "SurfaceForms", "DegenerateSurfaceError",
    "frame_at", "fundamental_forms", "shape_frame", "normal_curvature",
    "dot", "norm",
]

REGULARITY_RTOL = 1e-12     # |r_u x r_v| below this times |r_u||r_v| is degenerate
UMBILIC_RTOL = 1e-9         # |k1 - k2| below this times max(1, |k1|) is umbilic


class DegenerateSurfaceError(ValueError):
    """The parameterization is singular: r_u x r_v vanishes."""


def dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def norm(a):
    return np.sqrt(dot(a, a))


@dataclass
class FrameData:
    """Position, partials and the oriented unit normal at surface points."""

    r: np.ndarray
    r_u: np.ndarray
    r_v: np.ndarray
    r_uu: np.ndarray
    r_uv: np.ndarray
    r_vv: np.ndarray
    n: np.ndarray
    orientation_flipped: np.ndarray


@dataclass
class SurfaceForms:
    """Fundamental forms and curvature data; k1 <= k2."""

    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    B11: np.ndarray
    B12: np.ndarray
    B22: np.ndarray
    det_g: np.ndarray
    H: np.ndarray
    K: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    dir1: np.ndarray       # (u,v)-components of the k1 principal direction
    dir2: np.ndarray
    umbilic: np.ndarray    # where True, dir1/dir2 are an arbitrary orthonormal pair


def _frame_arrays(jet: Jet2Vec3, incident_hint):
    r = jet.value()
    r_u = jet.d_u()
    r_v = jet.d_v()
    shape = np.broadcast_shapes(r.shape, r_u.shape, r_v.shape)
    r, r_u, r_v = (np.broadcast_to(x, shape).astype(float) for x in (r, r_u, r_v))
    r_uu = np.broadcast_to(jet.d_uu(), shape).astype(float)
    r_uv = np.broadcast_to(jet.d_uv(), shape).astype(float)
    r_vv = np.broadcast_to(jet.d_vv(), shape).astype(float)
    hint = np.broadcast_to(np.asarray(incident_hint, dtype=float), shape)

    c = np.cross(r_u, r_v)
    cn = norm(c)
    ok = cn >= REGULARITY_RTOL * norm(r_u) * norm(r_v)
    with np.errstate(all="ignore"):
        n = c / np.where(cn > 0.0, cn, 1.0)[..., None]
    flip = dot(hint, n) > 0.0
    n = np.where(flip[..., None], -n, n)
    return FrameData(r, r_u, r_v, r_uu, r_uv, r_vv, n, flip), ok


def frame_at(jet: Jet2Vec3, incident_hint) -> FrameData:
    """Build the oriented frame at surface points.

    The raw normal (r_u x r_v)/|r_u x r_v| is negated wherever it has a
    positive dot product with the incident hint, so (hint, n) <= 0 holds
    pointwise.  Raises DegenerateSurfaceError if the chart is singular
    anywhere in the batch.
    """
    frame, ok = _frame_arrays(jet, incident_hint)
    if not np.all(ok):
        idx = np.argwhere(~np.atleast_1d(ok))
        raise DegenerateSurfaceError(
            f"degenerate parameterization (r_u x r_v ~ 0) at {idx.shape[0]} "
            f"point(s), first at grid index {tuple(idx[0])}")
    return frame


def fundamental_forms(frame: FrameData) -> SurfaceForms:
    """First/second fundamental forms, curvatures and principal directions."""
    g11 = dot(frame.r_u, frame.r_u)
    g12 = dot(frame.r_u, frame.r_v)
    g22 = dot(frame.r_v, frame.r_v)
    B11 = dot(frame.r_uu, frame.n)
    B12 = dot(frame.r_uv, frame.n)
    B22 = dot(frame.r_vv, frame.n)

    det_g = g11 * g22 - g12 * g12
    K = (B11 * B22 - B12 * B12) / det_g
    H = (g22 * B11 - 2.0 * g12 * B12 + g11 * B22) / (2.0 * det_g)

    # k1 <= k2 from H +- sqrt(H^2 - K).  The discriminant of a genuine umbilic
    # lands at round-off rather than exactly 0 and the sqrt would smear the
    # pair by its square root, so sub-round-off discriminants collapse to a
    # clean double root.
    disc = H * H - K
    scale = np.maximum(1.0, np.maximum(H * H, np.abs(K)))
    disc = np.where(np.abs(disc) <= 2e-13 * scale, 0.0, np.maximum(disc, 0.0))
    sq = np.sqrt(disc)
    k1 = H - sq
    k2 = H + sq
    umbilic = np.abs(k2 - k1) < UMBILIC_RTOL * np.maximum(1.0, np.abs(k1))

    # shape operator S = g^{-1} B (mixed components)
    S11 = (g22 * B11 - g12 * B12) / det_g
    S12 = (g22 * B12 - g12 * B22) / det_g
    S21 = (g11 * B12 - g12 * B11) / det_g
    S22 = (g11 * B22 - g12 * B12) / det_g

    def eigendirection(k):
        # rows of (S - k I) are both orthogonal to the eigenvector; use the
        # better-conditioned of the two null-space candidates
        c1 = np.stack([S12, k - S11], axis=-1)
        c2 = np.stack([k - S22, S21], axis=-1)
        n1 = dot(c1, c1)
        n2 = dot(c2, c2)
        X = np.where((n1 >= n2)[..., None], c1, c2)
        good = np.maximum(n1, n2) > 0.0
        return X, good

    X1, good1 = eigendirection(k1)
    X2, good2 = eigendirection(k2)

    # fallback pair, orthonormal in the metric: d_u/|d_u| and its g-orthogonal
    zeros = np.zeros_like(g11)
    Xa = np.stack([1.0 / np.sqrt(g11), zeros], axis=-1)
    Xb = np.stack([-g12, g11], axis=-1) / np.sqrt(g11 * det_g)[..., None]
    use_fallback = umbilic | ~good1 | ~good2
    X1 = np.where(use_fallback[..., None], Xa, X1)
    X2 = np.where(use_fallback[..., None], Xb, X2)

    def g_normalize(X):
        q = g11 * X[..., 0] ** 2 + 2.0 * g12 * X[..., 0] * X[..., 1] + g22 * X[..., 1] ** 2
        X = X / np.sqrt(q)[..., None]
        # deterministic sign: leading significant component positive
        lead = np.where(np.abs(X[..., 0]) >= np.abs(X[..., 1]), X[..., 0], X[..., 1])
        return X * np.where(lead < 0.0, -1.0, 1.0)[..., None]

    return SurfaceForms(g11, g12, g22, B11, B12, B22, det_g, H, K, k1, k2,
                        g_normalize(X1), g_normalize(X2), umbilic)


def shape_frame(frame: FrameData, forms: SurfaceForms):
    """Right-handed orthonormal frame (e1, e2, n) with e1, e2 principal."""

    def embed(X):
        return X[..., 0, None] * frame.r_u + X[..., 1, None] * frame.r_v

    e1 = embed(forms.dir1)
    e2 = embed(forms.dir2)
    handed = dot(np.cross(e1, e2), frame.n)
    e2 = np.where((handed < 0.0)[..., None], -e2, e2)
    return e1, e2, frame.n


def normal_curvature(forms: SurfaceForms, X) -> np.ndarray:
    """Normal curvature B(X, X)/g(X, X) for a tangent direction X in (u,v) components."""
    X = np.asarray(X, dtype=float)
    x0, x1 = X[..., 0], X[..., 1]
    gXX = forms.g11 * x0 * x0 + 2.0 * forms.g12 * x0 * x1 + forms.g22 * x1 * x1
    if np.any(gXX <= 0.0):
        raise ValueError("normal_curvature needs a direction of positive length")
    BXX = forms.B11 * x0 * x0 + 2.0 * forms.B12 * x0 * x1 + forms.B22 * x1 * x1
    return BXX / gXX
