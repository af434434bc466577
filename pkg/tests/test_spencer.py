from fractions import Fraction
from math import comb

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from projmetric.spencer import (
    PSI_WEIGHTS,
    Frame,
    ObstructionSpace,
    RatMat,
    ResourceLimit,
    SymIndex,
    cartan_test,
    delta_matrix,
    random_lambdas,
    spencer_H,
    tau1_check,
    tau_nullity,
    verify,
)
from projmetric.spencer.claims import dim_g, multichoose, rank_sigma3

small = st.integers(-3, 3)


@given(st.lists(st.lists(small, min_size=5, max_size=5), min_size=1, max_size=6))
def test_rank_matches_sympy(rows):
    M = RatMat.from_dense(rows)
    assert M.rank == sympy.Matrix(rows).rank()
    assert M.rank + M.nullity == 5


@given(st.lists(st.lists(small, min_size=4, max_size=4), min_size=1, max_size=5))
def test_nullspace_annihilated(rows):
    M = RatMat.from_dense(rows)
    basis = M.nullspace()
    assert len(basis) == M.nullity
    for v in basis:
        assert not any(M.apply(v).values())


def test_exact_fractions():
    M = RatMat.from_dense([[Fraction(1, 3), Fraction(2, 7)], [Fraction(2, 3), Fraction(4, 7)]])
    assert M.rank == 1


def test_resource_limit():
    with pytest.raises(ResourceLimit):
        RatMat(10, 10, limit=5)


def test_sym_index():
    idx = SymIndex(6, 3)
    assert len(idx) == multichoose(6, 3)
    assert idx.keys == sorted(idx.keys)
    assert all(idx.pos[k] == i for i, k in enumerate(idx.keys))


def test_lambdas_generic():
    lam = random_lambdas(4, 3)
    assert lam[-1] == 0 and len(set(lam)) == 4
    with pytest.raises(ValueError):
        Frame(3, (Fraction(1), Fraction(1), Fraction(0)))


def test_delta_squares_to_zero():
    D1 = delta_matrix(4, 1, 3)
    D2 = delta_matrix(4, 2, 2)
    assert (D2 @ D1).is_zero()


@pytest.mark.parametrize("n, expected", [(2, 13), (3, 38), (4, 84)])
def test_rank_sigma3(n, expected):
    assert rank_sigma3(n) == expected == (6 * n**3 + 9 * n**2 - 9 * n + 12) // 6


def test_tau_exact_sequence():
    t = tau_nullity(3)
    assert t.nullity == t.rank_sigma3 == 38
    assert t.composition_zero


@pytest.mark.parametrize("n, expected", [(2, 7), (3, 18), (4, 36)])
def test_dim_g3(n, expected):
    assert dim_g(n, 3) == expected == multichoose(n, 3) + multichoose(n - 1, 3) + 2 * multichoose(n - 1, 1)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_dim_g_n3(m):
    assert dim_g(3, m) == m * (m + 9) // 2


def test_seed_independence():
    assert dim_g(3, 3, seed=0) == dim_g(3, 3, seed=11)
    assert rank_sigma3(3, seed=0) == rank_sigma3(3, seed=5)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_spencer_vanishing(m):
    r = spencer_H(3, m)
    assert r.H == 0
    assert r.rank_delta1 == (5 * m * m + 53 * m + 38) // 2
    assert r.complex_ok


def test_spencer_h22():
    assert spencer_H(3, 2).H == 1
    assert spencer_H(3, 2, g1="full").H == 1


def test_tau1_exactness():
    t = tau1_check(3)
    assert t.exact and t.composition_zero
    assert t.extra_equations == (3 - 1) * (3 - 2) // 2


def test_cartan():
    assert cartan_test(3, 3, psi_weights=PSI_WEIGHTS).passed
    assert not cartan_test(3, 3, order=tuple(reversed(range(6))), psi_weights=PSI_WEIGHTS).passed
    assert not cartan_test(3, 3).passed
    assert not cartan_test(3, 2, psi_weights=PSI_WEIGHTS).passed


def test_obstruction_dimensions():
    space = ObstructionSpace(Frame.generic(3), 0)
    assert space.dim == comb(6 + 1, 2) + 2 * 6 * 3


def test_verify_table_deterministic():
    a = [c.as_dict() for c in verify(ns=(3,), ms=(3,), seed=2)]
    b = [c.as_dict() for c in verify(ns=(3,), ms=(3,), seed=2)]
    strip = lambda rows: [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    assert strip(a) == strip(b)
    assert all(r["match"] for r in a if r["authoritative"])
