"""Poincare duality for pairs of finite posets, checked in exact arithmetic."""

__version__ = "0.1.0"

from .homalg import QQ, ZZ, ChainComplex, ChainMap, Fp, GradedGroup, Ring, SparseMatrix
from .posets import Poset, PosetMap, PosetPair, cube, cylinder_pair, double, glue, grothendieck, product_pair
from .diagrams import System, hocolim, holim, relative_cohomology, relative_homology, yoneda
from .morita import (ClassifyingSystem, NotGroupoidal, NotTame, PoincareVerdict, classifying_system,
                     coend_reconstruct, dualising_system, local_to_global, poincare_verdict, verify_groupoidal_formula,
                     verify_morita)
from .classical import (FundamentalClass, RankOneLocalSystem, enumerate_sign_systems, find_fundamental_class,
                        verify_seven, wall_check_pair)
from .geom import (AdDiagram, ad_pair, builtin_spaces, check_ad, comb_manifold_check, get_space,
                   manifold_local_to_global, product_check, realization_check)
from .verdict import Verdict

__all__ = [
    "QQ", "ZZ", "ChainComplex", "ChainMap", "Fp", "GradedGroup", "Ring", "SparseMatrix",
    "Poset", "PosetMap", "PosetPair", "cube", "cylinder_pair", "double", "glue", "grothendieck", "product_pair",
    "System", "hocolim", "holim", "relative_cohomology", "relative_homology", "yoneda",
    "ClassifyingSystem", "NotGroupoidal", "NotTame", "PoincareVerdict", "classifying_system", "coend_reconstruct",
    "dualising_system", "local_to_global", "poincare_verdict", "verify_groupoidal_formula", "verify_morita",
    "FundamentalClass", "RankOneLocalSystem", "enumerate_sign_systems", "find_fundamental_class", "verify_seven",
    "wall_check_pair",
    "AdDiagram", "ad_pair", "builtin_spaces", "check_ad", "comb_manifold_check", "get_space",
    "manifold_local_to_global", "product_check", "realization_check",
    "Verdict",
]
