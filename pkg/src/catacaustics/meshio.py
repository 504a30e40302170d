"""Masked parameter-grid meshes and deterministic writers (OBJ, CSV, PLY).

Vertices are formatted with 9 fixed decimals and "\n" newlines, so identical
input produces byte-identical files on every run and platform.  Invalid
vertices are dropped (together with their incident faces) instead of emitting
NaN, which many mesh viewers reject.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .caustics import (FLAG_AT_INFINITY, FLAG_CLIPPED, FLAG_VALID,
                       CausticSheet)

__all__ = ["MaskedGrid", "clip_sheet", "export_mesh", "FORMATS"]

FORMATS = ("obj", "csv", "ply")


@dataclass
class MaskedGrid:
    """A nu x nv vertex grid with a per-vertex reason byte.

    Flag bits: 0 valid, 1 shadow, 2 grazing, 3 at_infinity, 4 clipped,
    5 excluded_zero_root.  Every invalid vertex carries at least one reason.
    """

    u: np.ndarray        # (nu,)
    v: np.ndarray        # (nv,)
    points: np.ndarray   # (nu, nv, 3); entries at invalid vertices are ignored
    flags: np.ndarray    # (nu, nv) uint8

    def __post_init__(self):
        nu, nv = len(self.u), len(self.v)
        if self.points.shape != (nu, nv, 3) or self.flags.shape != (nu, nv):
            raise ValueError("MaskedGrid arrays do not match the declared grid size")
        invalid = (self.flags & FLAG_VALID) == 0
        if np.any(invalid & (self.flags == 0)):
            raise ValueError("invalid vertices must carry at least one reason bit")

    @property
    def valid(self) -> np.ndarray:
        return (self.flags & FLAG_VALID) != 0


def clip_sheet(sheet: CausticSheet, max_radius: float = None) -> MaskedGrid:
    """Mask caustic vertices farther than max_radius along the reflected ray.

    max_radius = None (or inf) keeps every finite vertex; only the flags
    already present on the sheet apply.  Clipping handles the near-flat parts
    of a mirror whose caustic runs off toward infinity.
    """
    flags = sheet.flags.copy()
    if max_radius is not None and np.isfinite(max_radius):
        if max_radius <= 0.0:
            raise ValueError("max_radius must be positive")
        with np.errstate(all="ignore"):
            radius = np.where(sheet.k_star != 0.0,
                              1.0 / np.where(sheet.k_star != 0.0, sheet.k_star, 1.0),
                              np.inf)
        clip = sheet.valid & (np.abs(radius) > max_radius)
        flags[clip] |= FLAG_CLIPPED
        flags[clip] &= np.uint8(~FLAG_VALID & 0xFF)
    return MaskedGrid(sheet.u, sheet.v, sheet.xi, flags)


def _fmt9(x: float) -> str:
    s = f"{x:.9f}"
    return "0.000000000" if s == "-0.000000000" else s


def _vertex_index_map(grid: MaskedGrid):
    """Row-major 0-based indices over valid vertices; -1 elsewhere."""
    valid = grid.valid
    idx = np.full(valid.shape, -1, dtype=int)
    idx[valid] = np.arange(int(np.count_nonzero(valid)))
    return idx, valid


def _quad_faces(idx, valid):
    faces = []
    nu, nv = valid.shape
    for i in range(nu - 1):
        for j in range(nv - 1):
            corners = (idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1])
            if all(c >= 0 for c in corners):
                faces.append(corners)
    return faces


def _obj_text(grid: MaskedGrid) -> str:
    idx, valid = _vertex_index_map(grid)
    lines = []
    for i, j in np.argwhere(valid):
        x, y, z = grid.points[i, j]
        lines.append(f"v {_fmt9(x)} {_fmt9(y)} {_fmt9(z)}")
    for a, b, c, d in _quad_faces(idx, valid):
        lines.append(f"f {a + 1} {b + 1} {c + 1} {d + 1}")
    return "\n".join(lines) + ("\n" if lines else "")


def _csv_text(grid: MaskedGrid) -> str:
    lines = ["u,v,x,y,z,flags"]
    valid = grid.valid
    for i in range(len(grid.u)):
        for j in range(len(grid.v)):
            if valid[i, j]:
                x, y, z = grid.points[i, j]
                coords = f"{_fmt9(x)},{_fmt9(y)},{_fmt9(z)}"
            else:
                coords = ",,"
            lines.append(f"{_fmt9(grid.u[i])},{_fmt9(grid.v[j])},{coords},{int(grid.flags[i, j])}")
    return "\n".join(lines) + "\n"


def _ply_text(grid: MaskedGrid) -> str:
    idx, valid = _vertex_index_map(grid)
    faces = _quad_faces(idx, valid)
    n_vertices = int(np.count_nonzero(valid))
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {n_vertices}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(faces)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    lines = header[:]
    for i, j in np.argwhere(valid):
        x, y, z = grid.points[i, j]
        lines.append(f"{_fmt9(x)} {_fmt9(y)} {_fmt9(z)}")
    for a, b, c, d in faces:
        lines.append(f"4 {a} {b} {c} {d}")
    return "\n".join(lines) + "\n"


def export_mesh(grid: MaskedGrid, fmt: str, path) -> int:
    """Write the grid in the requested format; returns the byte count."""
    if fmt == "obj":
        text = _obj_text(grid)
    elif fmt == "csv":
        text = _csv_text(grid)
    elif fmt == "ply":
        text = _ply_text(grid)
    else:
        raise ValueError(f"unknown mesh format {fmt!r} (choose from {', '.join(FORMATS)})")
    data = text.encode("ascii")
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)
