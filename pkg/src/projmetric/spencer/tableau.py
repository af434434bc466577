"""Symbol tableaux of the projective metrizability operator in an adapted frame.

The abstract frame is ``e_0..e_{2n-1} = h_1..h_n, v_1..v_n`` with
``J h_i = v_i``, ``h`` the horizontal projector, ``Phi h_i = lambda_i v_i``
(``lambda_n = 0``), ``C = v_n`` and ``S = h_n``.  A vector is a sparse dict
``{basis index: Fraction}``.  Components of a symmetric tensor in ``S^m T*``
are indexed by sorted multi-indices over the ``2n`` basis labels.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .ratmat import DEFAULT_LIMIT, RatMat

__all__ = ["Frame", "SymIndex", "sym_eval", "symbol_constraints", "g_basis", "dim_g", "random_lambdas"]

Vec = dict  # {basis index: Fraction}


def random_lambdas(n: int, seed: int) -> tuple[Fraction, ...]:
    """Distinct nonzero small rationals ``lambda_1..lambda_{n-1}`` and ``lambda_n = 0``."""
    rng = random.Random(seed)
    vals: list[Fraction] = []
    while len(vals) < n - 1:
        q = Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 9))
        if q not in vals:
            vals.append(q)
    return tuple(vals) + (Fraction(0),)


@dataclass(frozen=True)
class Frame:
    n: int
    lambdas: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.lambdas) != self.n or self.lambdas[-1] != 0:
            raise ValueError("need n eigenvalues with lambda_n = 0")
        if len(set(self.lambdas)) != self.n:
            raise ValueError("eigenvalues must be pairwise distinct")

    @classmethod
    def generic(cls, n: int, seed: int = 0) -> "Frame":
        return cls(n, random_lambdas(n, seed))

    @property
    def dim(self) -> int:
        return 2 * self.n

    def e(self, a: int) -> Vec:
        return {a: Fraction(1)}

    def h(self, i: int) -> Vec:
        return {i: Fraction(1)}

    def v(self, i: int) -> Vec:
        return {self.n + i: Fraction(1)}

    @property
    def C(self) -> Vec:
        return self.v(self.n - 1)

    @property
    def S(self) -> Vec:
        return self.h(self.n - 1)

    def hor(self, X: Vec) -> Vec:
        return {a: c for a, c in X.items() if a < self.n}

    def J(self, X: Vec) -> Vec:
        return {a + self.n: c for a, c in X.items() if a < self.n}

    def Phi(self, X: Vec) -> Vec:
        out = {}
        for a, c in X.items():
            if a < self.n and self.lambdas[a]:
                out[a + self.n] = c * self.lambdas[a]
        return out


class SymIndex:
    """Sorted multi-indices of length ``m`` over ``N`` labels."""

    _cache: dict = {}

    def __new__(cls, N: int, m: int):
        key = (N, m)
        obj = cls._cache.get(key)
        if obj is None:
            obj = super().__new__(cls)
            obj.N, obj.m = N, m
            obj.keys = list(itertools.combinations_with_replacement(range(N), m))
            obj.pos = {k: i for i, k in enumerate(obj.keys)}
            cls._cache[key] = obj
        return obj

    def __len__(self) -> int:
        return len(self.keys)


def _add(acc: dict, key, val):
    w = acc.get(key, 0) + val
    if w:
        acc[key] = w
    else:
        acc.pop(key, None)


def sym_eval(vectors, index: SymIndex, offset: int = 0, scale=1) -> dict[int, Fraction]:
    """Row of the functional ``A -> scale * A(w_1, ..., w_m)`` on ``S^m`` coordinates."""
    if len(vectors) != index.m:
        raise ValueError("argument count must equal tensor degree")
    out: dict[int, Fraction] = {}
    if any(not w for w in vectors):
        return out
    for combo in itertools.product(*(w.items() for w in vectors)):
        coef = Fraction(scale)
        for _, c in combo:
            coef *= c
        key = tuple(sorted(a for a, _ in combo))
        _add(out, offset + index.pos[key], coef)
    return out


def _merge(*rows, signs=None) -> dict:
    out: dict = {}
    signs = signs or [1] * len(rows)
    for r, s in zip(rows, signs):
        for k, v in r.items():
            _add(out, k, s * v)
    return out


def symbol_constraints(frame: Frame, m: int, psi_weights=None) -> list[dict]:
    """Rows cutting out ``g_m`` inside ``S^m T*``.

    Prolongations of ``A(.., C) = 0``, ``A(.., hX, JY) - A(.., hY, JX) = 0``
    and ``A(.., Phi X, JY) - A(.., Phi Y, JX) = 0`` over every placement of
    the remaining arguments.  ``psi_weights`` ``(f_1, .., f_{n-1})`` adds the
    rows ``sum_i f_i A(.., v_i, v_i) = 0``.
    """
    n, N = frame.n, frame.dim
    idx = SymIndex(N, m)
    rows = []
    basis = [frame.e(a) for a in range(N)]
    for w in itertools.combinations_with_replacement(range(N), m - 1):
        rows.append(sym_eval([basis[a] for a in w] + [frame.C], idx))
    if m >= 2:
        for w in itertools.combinations_with_replacement(range(N), m - 2):
            ws = [basis[a] for a in w]
            for X, Y in itertools.combinations(range(N), 2):
                eX, eY = basis[X], basis[Y]
                rows.append(_merge(
                    sym_eval(ws + [frame.hor(eX), frame.J(eY)], idx),
                    sym_eval(ws + [frame.hor(eY), frame.J(eX)], idx),
                    signs=[1, -1],
                ))
                rows.append(_merge(
                    sym_eval(ws + [frame.Phi(eX), frame.J(eY)], idx),
                    sym_eval(ws + [frame.Phi(eY), frame.J(eX)], idx),
                    signs=[1, -1],
                ))
            if psi_weights is not None:
                rows.append(_merge(*(
                    sym_eval(ws + [frame.v(i), frame.v(i)], idx, scale=f)
                    for i, f in enumerate(psi_weights)
                )))
    return [r for r in rows if r]


def g_matrix(frame: Frame, m: int, psi_weights=None, extra_rows=(), limit: int = DEFAULT_LIMIT) -> RatMat:
    idx = SymIndex(frame.dim, m)
    if m == 0:
        rows = []
    else:
        rows = symbol_constraints(frame, m, psi_weights)
    return RatMat.from_rows(list(rows) + list(extra_rows), len(idx), limit)


def g_basis(frame: Frame, m: int, psi_weights=None, limit: int = DEFAULT_LIMIT) -> list[dict[int, int]]:
    """Integer basis of ``g_m`` as sparse vectors over ``S^m`` coordinates."""
    return g_matrix(frame, m, psi_weights, limit=limit).nullspace()


def dim_g(n: int, m: int, seed: int = 0, psi_weights=None) -> int:
    frame = Frame.generic(n, seed)
    return g_matrix(frame, m, psi_weights).nullity


def annihilator_rows(frame: Frame, m: int, labels) -> list[dict]:
    """Rows ``A(e_a, ...) = 0`` for every ``a`` in ``labels``."""
    idx = SymIndex(frame.dim, m)
    labels = set(labels)
    return [{i: Fraction(1)} for i, k in enumerate(idx.keys) if labels.intersection(k)]
