"""Geometric torsion invariants of triangulated 3-manifolds and their Grassmann generating functions."""

from .complex import build_complex, evaluate_invariant, invariant_boundary, invariant_closed, structurally_zero
from .geometry import Placement, random_placement
from .grassmann import GeneratorRegistry, GrassmannElement, berezin_integral, generating_invariant
from .gluing import GluingMap, glue
from .triangulation import BUILTIN_NAMES, Triangulation, builtin

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES", "GeneratorRegistry", "GluingMap", "GrassmannElement", "Placement", "Triangulation",
    "berezin_integral", "build_complex", "builtin", "evaluate_invariant", "generating_invariant", "glue",
    "invariant_boundary", "invariant_closed", "random_placement", "structurally_zero",
]
