"""Caustics of reflected wavefronts from parametric mirror surfaces.

The package computes, in closed form, the two focal sheets (caustics) of a
flat or spherical wavefront after reflection from a mirror r(u, v), and
validates them against an independent brute-force ray-envelope oracle.
"""

from .caustics import (CausticPoint, CausticSheet, FlatFront, FrontPoint,
                       FrontStatistics, GridSpec, IncidentField,
                       ModifiedForms, PointSource, ReflectionData,
                       caustic_coefficients, caustic_point,
                       compute_caustic_sheets, incident_direction,
                       modified_forms, reflect_direction, reflected_front_point,
                       reflection_data, solve_sheet_curvatures)
from .diffgeo import (FrameData, SurfaceForms, frame_at, fundamental_forms,
                      normal_curvature, shape_frame)
from .jets import Jet2, Jet2Vec3
from .meshio import MaskedGrid, clip_sheet, export_mesh
from .oracle import (RaySample, ValidationReport, focal_distances_bruteforce,
                     reflected_ray, validate_sheets)
from .surfacelang import (SurfaceAST, SurfaceDefinition, affine_transform,
                          eval_surface, parse_surface,
                          parse_surface_definition, to_text)
from .surfaces import BUILTINS, build_surface, builtin_listing

__version__ = "0.1.0"

__all__ = [
    "Jet2", "Jet2Vec3",
    "SurfaceAST", "SurfaceDefinition", "parse_surface",
    "parse_surface_definition", "eval_surface", "to_text", "affine_transform",
    "BUILTINS", "build_surface", "builtin_listing",
    "FrameData", "SurfaceForms", "frame_at", "fundamental_forms",
    "shape_frame", "normal_curvature",
    "FlatFront", "PointSource", "IncidentField", "GridSpec",
    "ReflectionData", "ModifiedForms", "CausticPoint", "CausticSheet",
    "FrontPoint", "FrontStatistics",
    "incident_direction", "reflect_direction", "reflection_data",
    "modified_forms", "caustic_coefficients", "solve_sheet_curvatures",
    "caustic_point", "reflected_front_point", "compute_caustic_sheets",
    "RaySample", "ValidationReport", "reflected_ray",
    "focal_distances_bruteforce", "validate_sheets",
    "MaskedGrid", "clip_sheet", "export_mesh",
]
