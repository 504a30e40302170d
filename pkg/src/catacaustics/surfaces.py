"""Built-in mirror surfaces.

Each entry assembles a surface-language expression from its parameters, so
the built-ins exercise exactly the same parse/evaluate path as user-written
definitions.  Scalar parameters become entries of the AST parameter table;
expression parameters (profile curves and the like) are substituted textually.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .surfacelang import SurfaceAST, SurfaceLangError, parse_surface

__all__ = ["BuiltinSurface", "BUILTINS", "build_surface", "builtin_listing"]

TWO_PI = 6.283185307179586


@dataclass(frozen=True)
class BuiltinSurface:
    name: str
    summary: str
    template: str                      # surface text with {expr-param} slots
    scalar_params: dict = field(default_factory=dict)   # name -> default value
    expr_params: dict = field(default_factory=dict)     # name -> default expression
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    notes: tuple = ()

    def build(self, params=None) -> SurfaceAST:
        params = dict(params or {})
        scalars = dict(self.scalar_params)
        exprs = dict(self.expr_params)
        for key, value in params.items():
            if key in scalars:
                try:
                    scalars[key] = float(value)
                except (TypeError, ValueError):
                    raise SurfaceLangError(
                        f"parameter '{key}' of '{self.name}' must be a number, got {value!r}")
            elif key in exprs:
                exprs[key] = str(value)
            else:
                known = ", ".join([*scalars, *exprs]) or "none"
                raise SurfaceLangError(
                    f"unknown parameter '{key}' for built-in '{self.name}' (takes: {known})")
        text = self.template.format(**{k: f"({v})" for k, v in exprs.items()})
        return parse_surface(text, scalars)


BUILTINS = {
    "sphere": BuiltinSurface(
        name="sphere",
        summary="sphere of radius R centered at the origin",
        template="[R*cos(u)*cos(v), R*cos(u)*sin(v), R*sin(u)]",
        scalar_params={"R": 1.0},
        domain=(0.2, 1.4, 0.0, TWO_PI),
        notes=("chart is pole-free for u away from pi/2",),
    ),
    "ellipsoid": BuiltinSurface(
        name="ellipsoid",
        summary="three-axis ellipsoid with semi-axes ax, ay, az",
        template="[ax*cos(u)*cos(v), ay*cos(u)*sin(v), az*sin(u)]",
        scalar_params={"ax": 1.0, "ay": 0.8, "az": 0.6},
        domain=(-1.3, 1.3, 0.0, TWO_PI),
    ),
    "elliptic-paraboloid": BuiltinSurface(
        name="elliptic-paraboloid",
        summary="graph z = cx*u^2 + cy*v^2 with cx, cy > 0",
        template="[u, v, cx*u^2 + cy*v^2]",
        scalar_params={"cx": 0.5, "cy": 0.5},
        domain=(-1.0, 1.0, -1.0, 1.0),
        notes=("with cx = cy = 1/2 and an axial flat front both caustic "
               "sheets collapse to the focal point (0, 0, 1/2)",),
    ),
    "hyperbolic-paraboloid": BuiltinSurface(
        name="hyperbolic-paraboloid",
        summary="graph z = cx*u^2 - cy*v^2 (saddle)",
        template="[u, v, cx*u^2 - cy*v^2]",
        scalar_params={"cx": 0.5, "cy": 0.5},
        domain=(-2.0, 2.0, -2.0, 2.0),
        notes=("with cx = cy = 1/2 and an axial flat front the sheets "
               "degenerate into two parabolas",),
    ),
    "revolution": BuiltinSurface(
        name="revolution",
        summary="surface of revolution of the profile (x(u), z(u)) about Oz",
        template="[{x}*cos(v), {x}*sin(v), {z}]",
        expr_params={"x": "2 + cos(u)", "z": "sin(u)"},
        domain=(0.2, 1.2, 0.0, TWO_PI),
        notes=("profile arc-length normalization (x')^2 + (z')^2 = 1 is "
               "optional; curvatures are computed for general profiles",
               "default profile is the unit-tube torus of mid-radius 2"),
    ),
    "translation": BuiltinSurface(
        name="translation",
        summary="translation surface z = f(u) + h(v)",
        template="[u, v, {f} + {h}]",
        expr_params={"f": "u^2/2", "h": "v^2/2"},
        domain=(-1.0, 1.0, -1.0, 1.0),
    ),
    "cylinder": BuiltinSurface(
        name="cylinder",
        summary="cylinder over the plane curve (gx(u), gy(u)) with rulings along Oz",
        template="[{gx}, {gy}, v]",
        expr_params={"gx": "cos(u)", "gy": "sin(u)"},
        domain=(-1.2, 1.2, 0.0, 1.0),
        notes=("Gaussian curvature is identically zero, so one caustic sheet "
               "sits at infinity; only the sheet over the curve's caustic is finite",),
    ),
}


def build_surface(name: str, params=None) -> tuple:
    """Instantiate a built-in by name; returns (SurfaceAST, default domain)."""
    try:
        entry = BUILTINS[name]
    except KeyError:
        raise SurfaceLangError(
            f"unknown built-in surface '{name}' (available: {', '.join(sorted(BUILTINS))})")
    return entry.build(params), entry.domain


def builtin_listing() -> str:
    """Human-readable catalog of the built-in surfaces."""
    lines = []
    for name in sorted(BUILTINS):
        b = BUILTINS[name]
        lines.append(f"{name}: {b.summary}")
        if b.scalar_params:
            defaults = ", ".join(f"{k}={v}" for k, v in b.scalar_params.items())
            lines.append(f"  scalar parameters: {defaults}")
        if b.expr_params:
            defaults = ", ".join(f"{k}={v!r}" for k, v in b.expr_params.items())
            lines.append(f"  expression parameters: {defaults}")
        d = b.domain
        lines.append(f"  default domain: u in [{d[0]}, {d[1]}]; v in [{d[2]}, {d[3]}]")
        for note in b.notes:
            lines.append(f"  note: {note}")
    return "\n".join(lines)
