"""Exact point-count verification of adapted-filtration and preprojective flag identities."""
from __future__ import annotations

from .adapted import (
    Diagram,
    FiltrationSetup,
    MainLemmaReport,
    SetupError,
    build_chart,
    diagram_of,
    make_setup,
    recipe_value,
    setup_from_diagram,
    verify_mainlemma,
)
from .exactlinalg import QQ, FieldSpec, Matrix, NonPolynomialCount, Subspace
from .flagchi import delta_eval, euler_characteristic, verify_genform
from .freealg import FreeElement, FWord, parse_element, parse_fword
from .quiver import LambdaModule, QuiverGraph, sigma_star, validate_module

__version__ = "0.1.0"

__all__ = [
    "Diagram",
    "FWord",
    "FieldSpec",
    "FiltrationSetup",
    "FreeElement",
    "LambdaModule",
    "MainLemmaReport",
    "Matrix",
    "NonPolynomialCount",
    "QQ",
    "QuiverGraph",
    "SetupError",
    "Subspace",
    "build_chart",
    "delta_eval",
    "diagram_of",
    "euler_characteristic",
    "make_setup",
    "parse_element",
    "parse_fword",
    "recipe_value",
    "setup_from_diagram",
    "sigma_star",
    "validate_module",
    "verify_genform",
    "verify_mainlemma",
]
