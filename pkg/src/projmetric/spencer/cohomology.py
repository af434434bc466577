"""Spencer delta complex on ``Lambda^k T* (x) g_m`` and Cartan's test."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .ratmat import DEFAULT_LIMIT, RatMat
from .tableau import Frame, SymIndex, annihilator_rows, g_matrix

__all__ = ["SpencerResult", "CartanResult", "delta_matrix", "spencer_H", "cartan_test"]


def delta_matrix(N: int, k: int, q: int, limit: int = DEFAULT_LIMIT) -> RatMat:
    """``delta: Lambda^k (x) S^q -> Lambda^{k+1} (x) S^{q-1}``.

    ``(delta B)(X_0..X_k; Y..) = sum_i (-1)^i B(X_0..^X_i..X_k; X_i, Y..)``.
    Coordinates are (increasing k-tuple, sorted q-multi-index) pairs in
    row-major order.
    """
    src_forms = list(itertools.combinations(range(N), k))
    dst_forms = list(itertools.combinations(range(N), k + 1))
    src_form_pos = {I: i for i, I in enumerate(src_forms)}
    src_sym = SymIndex(N, q)
    dst_sym = SymIndex(N, q - 1)
    ns = len(src_sym)
    rows = []
    for J in dst_forms:
        for w in dst_sym.keys:
            row = {}
            for i, a in enumerate(J):
                I = J[:i] + J[i + 1:]
                key = tuple(sorted(w + (a,)))
                col = src_form_pos[I] * ns + src_sym.pos[key]
                row[col] = row.get(col, 0) + (-1) ** i
            rows.append({c: v for c, v in row.items() if v})
    return RatMat.from_rows(rows, len(src_forms) * ns, limit)


def _restrict(D: RatMat, nforms: int, basis: list[dict], ncoords: int, limit: int) -> RatMat:
    """``D o (I (x) G)`` where the columns of ``G`` are the given basis vectors."""
    cols = []
    Dcols = D.columns()
    for f in range(nforms):
        for b in basis:
            acc: dict[int, Fraction] = {}
            for c, v in b.items():
                for r, d in Dcols[f * ncoords + c].items():
                    w = acc.get(r, 0) + d * v
                    if w:
                        acc[r] = w
                    else:
                        acc.pop(r, None)
            cols.append(acc)
    return RatMat.from_columns(cols, D.nrows, limit)


@dataclass
class SpencerResult:
    n: int
    m: int
    dim_g: dict[int, int]
    dim_ker_delta2: int
    rank_delta1: int
    complex_ok: bool  # delta_2 o delta_1 = 0 on the restricted spaces

    @property
    def H(self) -> int:
        return self.dim_ker_delta2 - self.rank_delta1


def spencer_H(
    frame: Frame | int,
    m: int,
    g1: str = "kernel",
    psi_weights=None,
    seed: int = 0,
    limit: int = DEFAULT_LIMIT,
) -> SpencerResult:
    """``H^{m,2}`` of the sequence ``T* (x) g_{m+1} -> Lambda^2 (x) g_m -> Lambda^3 (x) g_{m-1}``.

    ``g1`` chooses ``g_1`` when ``m = 2``: ``"kernel"`` is the kernel of the
    first-order symbol ``A(C) = 0``, ``"full"`` is all of ``T*``.
    """
    if m < 2:
        raise ValueError("m >= 2 required")
    if isinstance(frame, int):
        frame = Frame.generic(frame, seed)
    N = frame.dim
    bases = {}
    for q in (m - 1, m, m + 1):
        if q == 1 and g1 == "full":
            bases[q] = [{a: 1} for a in range(N)]
        else:
            bases[q] = g_matrix(frame, q, psi_weights, limit=limit).nullspace()
    D1 = delta_matrix(N, 1, m + 1, limit)
    D2 = delta_matrix(N, 2, m, limit)
    d1 = _restrict(D1, N, bases[m + 1], len(SymIndex(N, m + 1)), limit)
    d2 = _restrict(D2, N * (N - 1) // 2, bases[m], len(SymIndex(N, m)), limit)
    ker2 = d2.ncols - d2.rank
    # the image of delta_1 lies in Lambda^2 (x) g_m; check delta_2 delta_1 = 0 there
    complex_ok = (D2 @ d1).is_zero()
    return SpencerResult(
        n=frame.n,
        m=m,
        dim_g={q: len(b) for q, b in bases.items()},
        dim_ker_delta2=ker2,
        rank_delta1=d1.rank,
        complex_ok=complex_ok,
    )


@dataclass
class CartanResult:
    k: int
    order: tuple[int, ...]
    dim_next: int  # dim g_{k+1}
    reduced: list[int] = field(default_factory=list)  # dim (g_k)_{e_1..e_j}, j = 0..N-1

    @property
    def total(self) -> int:
        return sum(self.reduced)

    @property
    def passed(self) -> bool:
        return self.dim_next == self.total


def cartan_test(
    frame: Frame | int,
    k: int,
    order=None,
    psi_weights=None,
    seed: int = 0,
    limit: int = DEFAULT_LIMIT,
) -> CartanResult:
    """Check ``dim g_{k+1} = sum_{j=0}^{N-1} dim (g_k)_{e_1..e_j}`` for a basis ordering."""
    if isinstance(frame, int):
        frame = Frame.generic(frame, seed)
    N = frame.dim
    order = tuple(range(N)) if order is None else tuple(order)
    if sorted(order) != list(range(N)):
        raise ValueError("order must be a permutation of the basis labels")
    dim_next = g_matrix(frame, k + 1, psi_weights, limit=limit).nullity
    reduced = []
    for j in range(N):
        extra = annihilator_rows(frame, k, order[:j])
        reduced.append(g_matrix(frame, k, psi_weights, extra_rows=extra, limit=limit).nullity)
    return CartanResult(k=k, order=order, dim_next=dim_next, reduced=reduced)
