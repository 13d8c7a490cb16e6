"""Numerical toolkit for local reflexion spaces built from Lie-algebraic data."""

import importlib

__version__ = "0.1.0"

from .blackbox import BlackBoxReflexion, flat_product, trivial_reflexion
from .exceptions import ReflexiaError
from .lie import (LieAlgebraSpec, Ad, ad, bracket, fingerprint, killing_form, mat_exp,
                  mat_log, validate)
from .model import (HomogeneousReflexionModel, as_black_box, coset_normalize,
                    double_reflexion, reflexion, right_invariant_field, verify_axioms)
from .symmetric import Involution, bracket_generate, check_conditions, eigensplit, maximal_ideal_in

# reconstruction pulls in scikit-learn; load it (and flows) on first use
_LAZY = {
    "TransvectionReconstructor": "reconstruction", "compare_algebras": "reconstruction",
    "field_bracket": "reconstruction", "infinitesimal_automorphism_residual": "reconstruction",
    "r_field": "reconstruction", "reconstruct_algebra": "reconstruction",
    "tangent_maps": "reconstruction", "tangent_split": "reconstruction",
    "automorphism_flow_check": "flows", "integrate": "flows", "verify_flow_identity": "flows",
}


def __getattr__(name):
    if name in _LAZY:
        return getattr(importlib.import_module(f".{_LAZY[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "Ad", "BlackBoxReflexion", "HomogeneousReflexionModel", "Involution", "LieAlgebraSpec",
    "ReflexiaError", "ad", "as_black_box", "bracket", "bracket_generate", "check_conditions",
    "coset_normalize", "double_reflexion", "eigensplit", "fingerprint", "flat_product",
    "killing_form", "mat_exp", "mat_log", "maximal_ideal_in", "reflexion",
    "right_invariant_field", "trivial_reflexion", "validate", "verify_axioms", *_LAZY,
]
