"""Exact verification of the symbol, obstruction and Spencer cohomology dimensions."""
from .claims import Claim, PSI_WEIGHTS, dim_g, rank_sigma3, tau1_check, tau_nullity, verify
from .cohomology import CartanResult, SpencerResult, cartan_test, delta_matrix, spencer_H
from .obstruction import ObstructionSpace
from .ratmat import DEFAULT_LIMIT, RatMat, ResourceLimit
from .tableau import Frame, SymIndex, g_basis, random_lambdas, symbol_constraints

__all__ = [
    "Claim",
    "PSI_WEIGHTS",
    "dim_g",
    "rank_sigma3",
    "tau_nullity",
    "tau1_check",
    "verify",
    "CartanResult",
    "SpencerResult",
    "cartan_test",
    "delta_matrix",
    "spencer_H",
    "ObstructionSpace",
    "DEFAULT_LIMIT",
    "RatMat",
    "ResourceLimit",
    "Frame",
    "SymIndex",
    "g_basis",
    "random_lambdas",
    "symbol_constraints",
]
