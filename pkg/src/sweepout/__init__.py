"""Symmetric sphere-system calculus: configurations, moves, and analyzers."""

from .cells import (
    COLOR_BY_NAME,
    COLOR_NAMES,
    Color,
    Curve,
    Dart,
    Face,
    Region,
    Sphere,
    Vertex,
    complement,
    reverse,
    rho,
    rho_inv,
)
from .complex import (
    AmbiguousNesting,
    Configuration,
    EulerMismatch,
    InconsistentColoring,
    UnknownCell,
    ValidationReport,
    derive_faces,
    empty_configuration,
    find_isomorphism,
    invariant_key,
    isomorphic,
    orbit,
    region_adjacency,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "COLOR_BY_NAME",
    "COLOR_NAMES",
    "Color",
    "Curve",
    "Dart",
    "Face",
    "Region",
    "Sphere",
    "Vertex",
    "complement",
    "reverse",
    "rho",
    "rho_inv",
    "AmbiguousNesting",
    "Configuration",
    "EulerMismatch",
    "InconsistentColoring",
    "UnknownCell",
    "ValidationReport",
    "derive_faces",
    "empty_configuration",
    "find_isomorphism",
    "invariant_key",
    "isomorphic",
    "orbit",
    "region_adjacency",
    "validate",
]
