"""Exact rational matrices, sparse rows, fraction-free elimination.

Rows are stored as ``{column: Fraction}`` dicts.  Elimination runs on
integer copies of the rows (each scaled by the lcm of its denominators) and
keeps every row primitive by dividing out the gcd of its entries, so no
floating point and no unbounded Fraction growth is involved.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

__all__ = ["RatMat", "ResourceLimit", "DEFAULT_LIMIT"]

DEFAULT_LIMIT = 20_000


class ResourceLimit(RuntimeError):
    """Matrix larger than the configured guardrail."""


def _primitive(row: dict[int, int]) -> dict[int, int]:
    if not row:
        return row
    g = math.gcd(*row.values())
    lead = row[min(row)]
    if lead < 0:
        g = -g
    if g != 1:
        row = {c: v // g for c, v in row.items()}
    return row


def _to_int(row: Mapping[int, Fraction | int]) -> dict[int, int]:
    den = 1
    for v in row.values():
        d = Fraction(v).denominator
        den = den * d // math.gcd(den, d)
    out = {}
    for c, v in row.items():
        v = Fraction(v) * den
        if v:
            out[c] = int(v)
    return _primitive(out)


def _combine(a: int, r: dict[int, int], b: int, p: dict[int, int]) -> dict[int, int]:
    """``a*r - b*p`` with zeros dropped."""
    out = {c: a * v for c, v in r.items()} if a != 1 else dict(r)
    for c, v in p.items():
        w = out.get(c, 0) - b * v
        if w:
            out[c] = w
        else:
            out.pop(c, None)
    return out


class RatMat:
    """Sparse exact rational matrix."""

    def __init__(self, nrows: int, ncols: int, rows: Iterable[Mapping[int, Fraction | int]] = (), limit: int = DEFAULT_LIMIT):
        if nrows > limit or ncols > limit:
            raise ResourceLimit(f"{nrows}x{ncols} exceeds the {limit} guardrail")
        rows = [{c: Fraction(v) for c, v in r.items() if v} for r in rows]
        if len(rows) < nrows:
            rows.extend({} for _ in range(nrows - len(rows)))
        if len(rows) != nrows:
            raise ValueError("row count mismatch")
        for r in rows:
            if r and (min(r) < 0 or max(r) >= ncols):
                raise ValueError("column index out of range")
        self.nrows = nrows
        self.ncols = ncols
        self.rows = rows
        self.limit = limit

    @classmethod
    def from_rows(cls, rows, ncols: int, limit: int = DEFAULT_LIMIT) -> "RatMat":
        rows = list(rows)
        return cls(len(rows), ncols, rows, limit)

    @classmethod
    def from_dense(cls, data) -> "RatMat":
        data = [list(r) for r in data]
        ncols = len(data[0]) if data else 0
        return cls(len(data), ncols, [{j: v for j, v in enumerate(r) if v} for r in data])

    @classmethod
    def from_columns(cls, cols, nrows: int, limit: int = DEFAULT_LIMIT) -> "RatMat":
        cols = list(cols)
        rows: list[dict[int, Fraction]] = [{} for _ in range(nrows)]
        for j, col in enumerate(cols):
            for i, v in col.items():
                if v:
                    rows[i][j] = Fraction(v)
        return cls(nrows, len(cols), rows, limit)

    def to_dense(self) -> list[list[Fraction]]:
        return [[r.get(j, Fraction(0)) for j in range(self.ncols)] for r in self.rows]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def columns(self) -> list[dict[int, Fraction]]:
        cols: list[dict[int, Fraction]] = [{} for _ in range(self.ncols)]
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                cols[j][i] = v
        return cols

    def __matmul__(self, other: "RatMat") -> "RatMat":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = []
        for r in self.rows:
            acc: dict[int, Fraction] = {}
            for k, a in r.items():
                for j, b in other.rows[k].items():
                    acc[j] = acc.get(j, 0) + a * b
            out.append({j: v for j, v in acc.items() if v})
        return RatMat(self.nrows, other.ncols, out, max(self.limit, other.limit))

    def apply(self, vec: Mapping[int, Fraction | int]) -> dict[int, Fraction]:
        out = {}
        for i, r in enumerate(self.rows):
            s = sum((v * vec[c] for c, v in r.items() if c in vec), Fraction(0))
            if s:
                out[i] = s
        return out

    def is_zero(self) -> bool:
        return not any(self.rows)

    def vstack(self, other: "RatMat") -> "RatMat":
        if self.ncols != other.ncols:
            raise ValueError("column mismatch")
        return RatMat(self.nrows + other.nrows, self.ncols, self.rows + other.rows, max(self.limit, other.limit))

    # elimination ---------------------------------------------------------------

    @cached_property
    def _echelon(self) -> dict[int, dict[int, int]]:
        """Row echelon form keyed by pivot column (integer, primitive rows)."""
        pivots: dict[int, dict[int, int]] = {}
        for raw in self.rows:
            r = _to_int(raw)
            while r:
                c = min(r)
                p = pivots.get(c)
                if p is None:
                    pivots[c] = r
                    break
                a, b = p[c], r[c]
                g = math.gcd(a, b)
                r = _primitive(_combine(a // g, r, b // g, p))
        return pivots

    @property
    def rank(self) -> int:
        return len(self._echelon)

    @property
    def nullity(self) -> int:
        return self.ncols - self.rank

    @cached_property
    def rref(self) -> dict[int, dict[int, int]]:
        """Reduced echelon form: every pivot column appears in one row only."""
        rows = {c: dict(r) for c, r in self._echelon.items()}
        order = sorted(rows, reverse=True)
        for c in order:
            p = rows[c]
            for d in order:
                if d >= c:
                    continue
                q = rows[d]
                b = q.get(c)
                if b:
                    a = p[c]
                    g = math.gcd(a, b)
                    rows[d] = _primitive(_combine(a // g, q, b // g, p))
        return rows

    def nullspace(self) -> list[dict[int, int]]:
        """Integer basis of the kernel, one vector per free column.

        The result is checked against the original rows and its size against
        ``ncols - rank``.
        """
        rref = self.rref
        free = [j for j in range(self.ncols) if j not in rref]
        # column j -> list of (pivot col, pivot value, entry)
        hits: dict[int, list[tuple[int, int, int]]] = {j: [] for j in free}
        for c, r in rref.items():
            for j, v in r.items():
                if j != c:
                    hits[j].append((c, r[c], v))
        basis = []
        for j in free:
            den = 1
            for _, a, _ in hits[j]:
                den = den * abs(a) // math.gcd(den, abs(a))
            vec = {j: den}
            for c, a, v in hits[j]:
                vec[c] = -v * den // a
            g = math.gcd(*vec.values())
            basis.append({k: v // g for k, v in vec.items()})
        if len(basis) + self.rank != self.ncols:
            raise AssertionError("rank + nullity != cols")
        for vec in basis:
            if self.apply(vec):
                raise AssertionError("nullspace vector not annihilated")
        return basis

    def __repr__(self) -> str:
        return f"RatMat({self.nrows}x{self.ncols}, nnz={sum(len(r) for r in self.rows)})"
