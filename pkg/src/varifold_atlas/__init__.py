"""varifold-atlas: enumerate the admissible multiplicity varifolds of two
crossing curve families, predict the topology of the stable minimal
surfaces spanning them in close parallel planes, build those surfaces as
discrete minimal meshes, and verify stability spectrally."""

__version__ = "0.1.0"

from .curves import CurveSet, JordanCurve, Tolerances, load_curve_set
from .arrangement import (
    Arrangement,
    ArrangementFace,
    CrossingPoint,
    assign_signs,
    build_arrangement,
    compute_crossings,
)
from .varifolds import (
    CrossingType,
    Varifold,
    VarifoldStats,
    brute_force_enumerate,
    classify_crossing,
    compute_stats,
    edge_multiplicity,
    enumerate_varifolds,
    least_area_varifold,
    upper_bound,
)
from .sheets import SheetComplex, build_complex, cw_euler_characteristic, genus_and_boundaries
from .trimesh import TriMesh
from .meshing import MeshParams, assemble_mesh
from .relax import RelaxReport, graph_check, helicoid_fit, relax
from .stability import StabilityReport, gauss_image_area, smallest_eigenvalue, stability_verdict

__all__ = [
    "CurveSet", "JordanCurve", "Tolerances", "load_curve_set",
    "Arrangement", "ArrangementFace", "CrossingPoint",
    "compute_crossings", "build_arrangement", "assign_signs",
    "Varifold", "VarifoldStats", "CrossingType",
    "enumerate_varifolds", "brute_force_enumerate", "classify_crossing",
    "edge_multiplicity", "compute_stats", "least_area_varifold", "upper_bound",
    "SheetComplex", "build_complex", "cw_euler_characteristic", "genus_and_boundaries",
    "TriMesh", "MeshParams", "assemble_mesh",
    "RelaxReport", "relax", "graph_check", "helicoid_fit",
    "StabilityReport", "smallest_eigenvalue", "gauss_image_area", "stability_verdict",
]
