"""The symbol map sigma and the obstruction maps tau, tau_h as exact matrices.

``ObstructionSpace(frame, r)`` is the target of ``sigma_{r+3}``:

* ``B_C`` in ``S^{r+2} T*``,
* ``B_Gamma`` and ``B_Phi`` in ``S^{r+1} T* (x) Lambda^2 T*_v``; the 2-form part
  is semibasic, so its coordinates are horizontal pairs ``i < j``.

``r = 0`` gives the first-order obstruction ``tau``; ``r = 1`` carries the
prolongation ``id (x) tau`` together with ``tau_h``.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import cached_property

from .ratmat import DEFAULT_LIMIT, RatMat
from .tableau import Frame, SymIndex, _add, _merge, sym_eval

__all__ = ["ObstructionSpace"]


class ObstructionSpace:
    def __init__(self, frame: Frame, r: int = 0, limit: int = DEFAULT_LIMIT):
        self.frame = frame
        self.r = r
        self.limit = limit
        N, n = frame.dim, frame.n
        self.idx_C = SymIndex(N, r + 2)
        self.idx_T = SymIndex(N, r + 1)
        self.pairs = list(itertools.combinations(range(n), 2))
        self.pair_pos = {p: k for k, p in enumerate(self.pairs)}
        self.off_G = len(self.idx_C)
        self.block = len(self.idx_T) * len(self.pairs)
        self.off_P = self.off_G + self.block
        self.dim = self.off_P + self.block

    # evaluation of the components on arbitrary vectors -------------------------

    def BC(self, args) -> dict:
        return sym_eval(list(args), self.idx_C)

    def _two_form(self, offset: int, sym_args, Y, Z) -> dict:
        """Row of ``B(sym_args; Y, Z)`` for a semibasic 2-form valued block."""
        n = self.frame.n
        out: dict = {}
        Yh = [(a, c) for a, c in Y.items() if a < n]
        Zh = [(a, c) for a, c in Z.items() if a < n]
        if not Yh or not Zh:
            return out
        base = sym_eval(list(sym_args), self.idx_T)
        if not base:
            return out
        npairs = len(self.pairs)
        for (b, cy), (c, cz) in itertools.product(Yh, Zh):
            if b == c:
                continue
            sign = 1 if b < c else -1
            k = self.pair_pos[(min(b, c), max(b, c))]
            for col, v in base.items():
                _add(out, offset + col * npairs + k, sign * cy * cz * v)
        return out

    def BG(self, sym_args, Y, Z) -> dict:
        return self._two_form(self.off_G, sym_args, Y, Z)

    def BP(self, sym_args, Y, Z) -> dict:
        return self._two_form(self.off_P, sym_args, Y, Z)

    # sigma ---------------------------------------------------------------------

    @cached_property
    def sigma(self) -> RatMat:
        """``sigma_{r+3}``: ``S^{r+3} T*`` to this space (rows = coordinates here)."""
        f = self.frame
        idxA = SymIndex(f.dim, self.r + 3)
        rows: list[dict] = []
        for t in self.idx_C.keys:
            rows.append(sym_eval([f.e(a) for a in t] + [f.C], idxA))
        for block in ("G", "P"):
            for t in self.idx_T.keys:
                ws = [f.e(a) for a in t]
                for i, j in self.pairs:
                    hi, hj = f.h(i), f.h(j)
                    if block == "G":
                        row = _merge(
                            sym_eval(ws + [f.hor(hi), f.J(hj)], idxA, scale=2),
                            sym_eval(ws + [f.hor(hj), f.J(hi)], idxA, scale=2),
                            signs=[1, -1],
                        )
                    else:
                        row = _merge(
                            sym_eval(ws + [f.Phi(hi), f.J(hj)], idxA),
                            sym_eval(ws + [f.Phi(hj), f.J(hi)], idxA),
                            signs=[1, -1],
                        )
                    rows.append(row)
        return RatMat.from_rows(rows, len(idxA), self.limit)

    # tau -----------------------------------------------------------------------

    def tau_rows(self) -> dict[str, list[dict]]:
        """All component rows of ``tau`` (prolonged by the ``r`` prefix slots)."""
        f = self.frame
        n, N = f.n, f.dim
        E = [f.e(a) for a in range(N)]
        lam = f.lambdas
        out: dict[str, list[dict]] = {k: [] for k in ("tau1", "tau2", "tau3", "tau4", "tau5", "tau6", "tau7", "tau_ijk")}
        half = Fraction(1, 2)
        for t in itertools.combinations_with_replacement(range(N), self.r):
            P = [E[a] for a in t]
            BC = lambda X, Y: self.BC(P + [X, Y])
            BG = lambda X, Y, Z: self.BG(P + [X], Y, Z)
            BP = lambda X, Y, Z: self.BP(P + [X], Y, Z)
            for X, Y, Z in itertools.product(E, repeat=3):
                out["tau1"].append(_merge(BG(f.hor(X), Y, Z), BG(f.hor(Y), Z, X), BG(f.hor(Z), X, Y)))
                out["tau2"].append(_merge(BG(f.J(X), Y, Z), BG(f.J(Y), Z, X), BG(f.J(Z), X, Y)))
                out["tau4"].append(_merge(BP(f.Phi(X), Y, Z), BP(f.Phi(Y), Z, X), BP(f.Phi(Z), X, Y)))
                out["tau5"].append(_merge(BP(f.J(X), Y, Z), BP(f.J(Y), Z, X), BP(f.J(Z), X, Y)))
            for X, Y in itertools.product(E, repeat=2):
                out["tau3"].append(_merge(
                    BG(f.C, X, Y), BC(f.hor(X), f.J(Y)), BC(f.hor(Y), f.J(X)), signs=[half, -1, 1]
                ))
                out["tau6"].append(_merge(
                    BP(f.C, X, Y), BC(f.Phi(X), f.J(Y)), BC(f.Phi(Y), f.J(X)), signs=[1, -1, 1]
                ))
                out["tau7"].append(_merge(BP(X, Y, f.S), BC(X, f.Phi(Y)), signs=[1, -1]))
            for i, j, k in itertools.permutations(range(n), 3):
                out["tau_ijk"].append(_merge(
                    BG(f.v(i), f.h(j), f.h(k)),
                    BP(f.h(j), f.h(i), f.h(k)),
                    BP(f.h(k), f.h(i), f.h(j)),
                    signs=[half, 1 / (lam[k] - lam[i]), 1 / (lam[i] - lam[j])],
                ))
        return {k: _dedupe(v) for k, v in out.items()}

    def tau_h_rows(self) -> list[dict]:
        """Polarized coefficients of the quadratic map ``tau_h(B)(X, Y)`` (needs ``r = 1``)."""
        if self.r != 1:
            raise ValueError("tau_h lives on the once-prolonged space")
        f = self.frame
        E = [f.e(a) for a in range(f.dim)]
        half = Fraction(1, 2)
        polys: dict[tuple, dict] = {}
        for p, q, r_, s in itertools.product(range(f.dim), repeat=4):
            # x_p y_q x_r y_s with X-slots (p, r) and Y-slots (q, s)
            key = (tuple(sorted((p, r_))), tuple(sorted((q, s))))
            acc = polys.setdefault(key, {})
            X1, Y1, X2, Y2 = E[p], E[q], E[r_], E[s]
            # (1/2) B_G(Phi X, J Y; X, Y) - (1/2) B_G(Phi Y, J X; X, Y)
            # + B_P(h Y, J X; X, Y) - B_P(h X, J Y; X, Y)
            for k, v in _merge(
                self.BG([f.Phi(X1), f.J(Y1)], X2, Y2),
                self.BG([f.Phi(Y1), f.J(X1)], X2, Y2),
                self.BP([f.hor(Y1), f.J(X1)], X2, Y2),
                self.BP([f.hor(X1), f.J(Y1)], X2, Y2),
                signs=[half, -half, 1, -1],
            ).items():
                _add(acc, k, v)
        return _dedupe(polys.values())

    def matrix(self, rows) -> RatMat:
        return RatMat.from_rows(rows, self.dim, self.limit)


def _dedupe(rows) -> list[dict]:
    seen = set()
    out = []
    for r in rows:
        if not r:
            continue
        key = frozenset(r.items())
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out
