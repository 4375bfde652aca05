"""Curvature and relative nullity of Euclidean submanifolds from Taylor jets."""

from .analyzer import ClassificationReport, analyze_grid, analyze_point, classify
from .bilinear import BilinearForm, find_regular_element, moore_diagonalize, moore_nullity
from .catalog import ImmersionDef, get, list_catalog
from .estimator import NullityProfiler
from .extension import build_phi, build_ruled_extension, extend, ruled_case_check
from .geometry import point_geometry, point_geometry_at
from .jets import Jet, jet_compose, lift, taylor_lift

__version__ = "0.1.0"

__all__ = [
    "BilinearForm",
    "ClassificationReport",
    "ImmersionDef",
    "Jet",
    "NullityProfiler",
    "analyze_grid",
    "analyze_point",
    "build_phi",
    "build_ruled_extension",
    "classify",
    "extend",
    "find_regular_element",
    "get",
    "jet_compose",
    "lift",
    "list_catalog",
    "moore_diagonalize",
    "moore_nullity",
    "point_geometry",
    "point_geometry_at",
    "ruled_case_check",
    "taylor_lift",
]
