"""Compatibility conditions and the projective-metrizability verdict (n = 3).

Frame labels follow the adapted basis: index ``i`` (0-based) is ``h_{i+1}``
and ``n + i`` is ``v_{i+1}``; ``h_n = S`` and ``v_n = C``.  Structure
functions ``xi^k_[a,b]`` and ``nu^k_[a,b]`` are ``F.structure[a, b, k]`` and
``F.structure[a, b, n + k]``.

The unknowns are the components ``a_ii = Omega(v_i, h_i)`` of the closed
2-form ``Omega = dd_J F``; every other frame component of ``Omega`` vanishes
and ``a_nn = 0``.  Lie derivatives of the ``a_ii`` reduce to linear forms in
the ``a_ii`` themselves (``OmegaLin``), using ``d Omega = 0`` and, along the
distribution ``D_i = span{h_i, v_i}``, the relation
``eta_1 a_11 + eta_2 a_22 = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exprlang import SprayModel
from .jets import Jet, JetError, PointTM
from .spraygeom import (
    ComplexEigenvalues,
    EigenvalueCollision,
    FramePack,
    GeometryError,
    PointGeometry,
    Tolerances,
    eigenframe,
    jacobi,
    phi_prime_frame,
)

__all__ = [
    "Classification",
    "Verdict",
    "EtaZero",
    "InconsistentReducibility",
    "OmegaLin",
    "ThirdOrder",
    "SpanFit",
    "ConditionReport",
    "classify",
    "cond_phi_prime_span",
    "third_order_coeffs",
    "reducibility",
    "omega",
    "lie_derivative_omega",
    "reduced_condition",
    "coeff1_form",
    "theta_matrix",
    "verdict",
    "analyze_frame",
    "analyze_point",
    "aggregate",
    "ORDER_BASIC",
    "ORDER_THETA",
]

ORDER_BASIC = 4  # kappa needs frame derivatives of structure functions
ORDER_THETA = 6  # Theta needs second frame derivatives of eta


class Classification(str, Enum):
    FLAT = "flat"
    ISOTROPIC = "isotropic"
    GENERIC = "generic-distinct"
    DEGENERATE = "degenerate"


class Verdict(str, Enum):
    THM44 = "metrizable-by-Thm4.4"
    FINAL = "metrizable-by-final-Thm"
    ISOTROPIC = "metrizable-isotropic"
    NOT = "not-metrizable"
    INCONCLUSIVE = "inconclusive"

    @property
    def metrizable(self) -> bool:
        return self in (Verdict.THM44, Verdict.FINAL, Verdict.ISOTROPIC)


class EtaZero(ArithmeticError):
    """One coefficient of the reduced relation vanishes."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InconsistentReducibility(ArithmeticError):
    """beta/gamma test and involutivity test of D_i disagree."""


# classification -----------------------------------------------------------------


def _isotropy_residual(Phi: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    n = len(y)
    rho = float(np.trace(Phi)) / (n - 1)
    P = np.eye(n) - np.outer(y, y) / float(y @ y)
    return rho, float(np.linalg.norm(P @ (Phi - rho * np.eye(n))))


def classify(Phi: np.ndarray, y, tolerances: Tolerances = Tolerances()) -> tuple[Classification, dict]:
    """Flat, isotropic, generic-distinct or degenerate, from the value of Phi at a point."""
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    norm = float(np.linalg.norm(Phi))
    info: dict = {"phi_norm": norm}
    if norm <= tolerances.tol:
        return Classification.FLAT, info
    rho, resid = _isotropy_residual(Phi, y)
    info.update(rho=rho, isotropy_residual=resid / norm)
    if resid <= tolerances.tol * norm:
        return Classification.ISOTROPIC, info
    w = np.linalg.eigvals(Phi)
    info["eigenvalues"] = sorted(w.real.tolist())
    if np.max(np.abs(w.imag)) > tolerances.tol * (1.0 + norm):
        info["reason"] = "complex eigenvalues"
        return Classification.DEGENERATE, info
    lam = np.sort(w.real)
    gap = float(np.min(np.diff(lam))) if len(lam) > 1 else math.inf
    info["min_gap"] = gap
    if gap > tolerances.sep_tol * norm:
        return Classification.GENERIC, info
    info["reason"] = "eigenvalue collision"
    return Classification.DEGENERATE, info


# condition 1 ----------------------------------------------------------------------


@dataclass
class SpanFit:
    A: float
    B: float
    residual: float  # off-diagonal part of the h_1, h_2 block relative to its norm
    M: np.ndarray  # Phi'(h_i) = sum_k M[k, i] v_k
    normal_component: np.ndarray  # M[n-1, :n-1], the C-components (diagnostic)

    def passed(self, tol: float) -> bool:
        return self.residual <= tol


def cond_phi_prime_span(F: FramePack, M: np.ndarray | None = None) -> SpanFit:
    """Least-squares fit ``Phi' = A Phi + B J`` on the horizontal complement of S."""
    n = F.n
    if M is None:
        M = np.asarray(phi_prime_frame(F).value)
    lam = F.lambdas[: n - 1]
    block = M[: n - 1, : n - 1]
    diag = np.diag(block)
    design = np.stack([lam, np.ones_like(lam)], axis=1)
    (A, B), *_ = np.linalg.lstsq(design, diag, rcond=None)
    fit = np.diag(A * lam + B)
    denom = float(np.linalg.norm(block))
    resid = float(np.linalg.norm(block - fit))
    rel = resid / denom if denom > 0 else 0.0
    return SpanFit(float(A), float(B), rel, M, M[n - 1, : n - 1].copy())


# structure-function helpers ----------------------------------------------------------


class _Frame:
    """Index helpers and derived brackets for a FramePack."""

    def __init__(self, F: FramePack):
        self.F = F
        self.n = F.n
        self.c = F.structure
        self.space = F.fields.space

    def h(self, i):
        return i

    def v(self, i):
        return self.n + i

    def xi(self, k, a, b) -> Jet:
        return self.c[a, b, k]

    def nu(self, k, a, b) -> Jet:
        return self.c[a, b, self.n + k]

    def unit(self, a) -> Jet:
        e = np.zeros(2 * self.n)
        e[a] = 1.0
        return Jet.const(self.space, e)

    def derive(self, X: Jet, g: Jet) -> Jet:
        """Derivative of ``g`` along the field with frame components ``X``."""
        total = None
        for k in range(2 * self.n):
            if not np.any(X.coeffs[k]):
                continue
            t = X[k] * self.F.derive(k, g)
            total = t if total is None else total + t
        if total is None:
            return Jet.zeros(self.space, g.shape, g.order - 1)
        return total

    def bracket(self, X: Jet, Y: Jet) -> Jet:
        """Frame components of ``[X, Y]`` for fields given by frame components."""
        c = self.c
        out = self.derive(X, Y) - self.derive(Y, X)
        m = 2 * self.n
        for k in range(m):
            if not np.any(X.coeffs[k]):
                continue
            for l in range(m):
                if not np.any(Y.coeffs[l]):
                    continue
                out = out + X[k] * Y[l] * c[k, l]
        return out

    def br(self, a, b) -> Jet:
        return self.c[a, b]


# third-order coefficients -------------------------------------------------------


@dataclass
class ThirdOrder:
    kappa: dict  # (i, j) -> kappa^i_ij, upper index = first lower index
    theta: dict  # (k, i, j) -> theta^k_ij
    beta: dict  # (i, j) -> beta^i_ij
    gamma: dict  # (i, j) -> gamma^i_ij
    jets: dict = field(default_factory=dict, repr=False)

    def max_abs(self, which: str) -> float:
        d = getattr(self, which)
        return max((abs(v) for v in d.values()), default=0.0)


def _kappa(fr: _Frame, lam: Jet, i: int, j: int) -> Jet:
    h, v, xi, nu = fr.h, fr.v, fr.xi, fr.nu
    F = fr.F
    first = (
        F.derive(v(j), xi(i, h(i), h(j)))
        - F.derive(v(j), nu(i, h(j), v(i)))
        - F.derive(h(j), nu(i, v(i), v(j)))
        + F.derive(h(j), xi(i, v(j), h(i)))
    )
    hv_j = fr.br(h(j), v(j))
    inner1 = fr.bracket(fr.unit(v(i)), hv_j)  # [v_i, [h_j, v_j]]
    inner2 = fr.bracket(hv_j, fr.unit(h(i)))  # [[h_j, v_j], h_i]
    second = (
        inner1[fr.n + i]
        - inner2[i]
        - nu(j, v(j), h(i)) * xi(i, v(j), h(j))
        - xi(j, h(i), h(j)) * xi(i, h(j), v(j))
        - nu(j, v(j), v(i)) * nu(i, v(j), h(j))
        - xi(j, v(i), h(j)) * nu(i, h(j), v(j))
    )
    return lam[j] * first + lam[i] * second


def _theta(fr: _Frame, lam: Jet, k: int, i: int, j: int) -> Jet:
    h, v, xi, nu = fr.h, fr.v, fr.xi, fr.nu
    return (lam[i] - lam[j]) * (
        xi(k, h(j), v(j)) * nu(k, h(i), v(i)) - xi(k, h(i), v(i)) * nu(k, h(j), v(j))
    )


def third_order_coeffs(F: FramePack) -> ThirdOrder:
    """kappa, theta, beta, gamma for every ordered pair ``i != j < n`` (and all k for theta)."""
    fr = _Frame(F)
    n = F.n
    lam = F.eigenvalues
    kap, the, bet, gam, jets = {}, {}, {}, {}, {}
    for i in range(n - 1):
        for j in range(n - 1):
            if i == j:
                continue
            kj = _kappa(fr, lam, i, j)
            jets[("kappa", i, j)] = kj
            kap[(i, j)] = kj.value
            b = lam[j] * fr.nu(i, fr.v(j), fr.h(j))
            g = lam[j] * fr.xi(i, fr.v(j), fr.h(j))
            jets[("beta", i, j)] = b
            jets[("gamma", i, j)] = g
            bet[(i, j)] = b.value
            gam[(i, j)] = g.value
            for k in range(n):
                t = _theta(fr, lam, k, i, j)
                jets[("theta", k, i, j)] = t
                the[(k, i, j)] = t.value
    return ThirdOrder(kap, the, bet, gam, jets)


def _scale(F: FramePack) -> float:
    c = np.asarray(F.structure.value)
    return (1.0 + float(np.max(np.abs(F.lambdas)))) * (1.0 + float(np.max(np.abs(c))))


@dataclass
class Reducibility:
    reducible: bool
    beta_gamma_max: float
    involutivity_residual: float
    consistent: bool


def reducibility(T: ThirdOrder, F: FramePack, tolerances: Tolerances = Tolerances(), strict: bool = True) -> Reducibility:
    """beta = gamma = 0, cross-checked with involutivity of each D_i = span{h_i, v_i}."""
    n = F.n
    scale = _scale(F)
    bg = max(T.max_abs("beta"), T.max_abs("gamma"))
    c = np.asarray(F.structure.value)
    inv = 0.0
    for i in range(n - 1):
        comp = c[i, n + i].copy()
        comp[[i, n + i]] = 0.0
        inv = max(inv, float(np.max(np.abs(comp))))
    lam_min = float(np.min(np.abs(F.lambdas[: n - 1])))
    red_bg = bg <= tolerances.tol * scale
    red_inv = inv * max(lam_min, 1e-300) <= tolerances.tol * scale
    consistent = red_bg == red_inv
    if strict and not consistent:
        raise InconsistentReducibility(
            f"beta/gamma max {bg:.3e} vs involutivity residual {inv:.3e} disagree"
        )
    return Reducibility(red_bg and red_inv, bg, inv, consistent)


# linear forms in the Omega components ------------------------------------------------


class OmegaLin:
    """Linear form ``sum_i coeffs[i] * a_ii`` (``i < n-1``) with jet coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Jet):
        self.coeffs = coeffs

    @classmethod
    def zero(cls, F: FramePack, order: int | None = None) -> "OmegaLin":
        return cls(Jet.zeros(F.fields.space, (F.n - 1,), F.order if order is None else order))

    @classmethod
    def unit(cls, F: FramePack, i: int) -> "OmegaLin":
        e = np.zeros(F.n - 1)
        e[i] = 1.0
        return cls(Jet.const(F.fields.space, e, F.order))

    def __add__(self, other: "OmegaLin") -> "OmegaLin":
        return OmegaLin(self.coeffs + other.coeffs)

    def __sub__(self, other: "OmegaLin") -> "OmegaLin":
        return OmegaLin(self.coeffs - other.coeffs)

    def __neg__(self) -> "OmegaLin":
        return OmegaLin(-self.coeffs)

    def __mul__(self, c) -> "OmegaLin":
        """Multiply by a scalar jet or number."""
        return OmegaLin(self.coeffs * c)

    __rmul__ = __mul__

    @property
    def value(self) -> np.ndarray:
        return np.asarray(self.coeffs.value, dtype=float)

    @property
    def order(self) -> int:
        return self.coeffs.order

    def __repr__(self) -> str:
        return f"OmegaLin({self.value.tolist()}, order={self.order})"


def omega(F: FramePack, X: Jet, Y: Jet) -> OmegaLin:
    """``Omega(X, Y) = sum_i (nu^i_X xi^i_Y - xi^i_X nu^i_Y) a_ii`` for frame components X, Y."""
    n = F.n
    cols = [X[n + i] * Y[i] - X[i] * Y[n + i] for i in range(n - 1)]
    return OmegaLin(Jet.stack(cols))


class LieContext:
    """Lie derivatives of OmegaLin forms along frame fields.

    ``eta`` (jets of shape ``(2,)``) is the reduced relation used along
    ``D_1`` and ``D_2``; it may be ``None`` when no derivative along those
    distributions is requested.
    """

    def __init__(self, F: FramePack, eta: Jet | None = None, tolerances: Tolerances = Tolerances()):
        if F.n != 3 and eta is not None:
            raise ValueError("the reduced relation is only defined for n = 3")
        self.F = F
        self.fr = _Frame(F)
        self.eta = eta
        self.tol = tolerances
        self._cache: dict = {}
        if eta is not None:
            ev = np.abs(np.asarray(eta.value))
            bound = tolerances.tol * _scale(F)
            for i, e in enumerate(ev):
                if e <= bound:
                    raise EtaZero(f"eta_{i + 1} vanishes ({e:.3e})", i)

    def omega(self, X: Jet, Y: Jet) -> OmegaLin:
        return omega(self.F, X, Y)

    def omega_ab(self, a, b) -> OmegaLin:
        return omega(self.F, self._comp(a), self._comp(b))

    def _comp(self, a) -> Jet:
        return self.fr.unit(a) if isinstance(a, (int, np.integer)) else a

    def ratio(self, j: int) -> Jet:
        """``rho_j`` with ``a_jj = rho_j a_kk`` from ``eta_1 a_11 + eta_2 a_22 = 0``."""
        k = 1 - j
        return -(self.eta[k] / self.eta[j])

    def lie_unit(self, a: int, j: int) -> OmegaLin:
        """``L_{e_a} a_jj``."""
        key = (a, j)
        if key in self._cache:
            return self._cache[key]
        n = self.F.n
        fr = self.fr
        if a in (j, n + j):
            if self.eta is None:
                raise ValueError("derivative along D_j needs the reduced relation")
            k = 1 - j
            rho = self.ratio(j)
            res = OmegaLin.unit(self.F, k) * self.F.derive(a, rho) + self.lie_unit(a, k) * rho
        else:
            # e Omega(v_j, h_j) = Omega([e, v_j], h_j) + Omega([v_j, h_j], e) + Omega([h_j, e], v_j);
            # the derivative terms vanish because Omega(h_j, e) = Omega(e, v_j) = 0 identically
            e, vj, hj = fr.unit(a), fr.unit(fr.v(j)), fr.unit(fr.h(j))
            res = (
                self.omega(fr.br(a, fr.v(j)), hj)
                + self.omega(fr.br(fr.v(j), fr.h(j)), e)
                + self.omega(fr.br(fr.h(j), a), vj)
            )
        self._cache[key] = res
        return res

    def lie(self, X, form: OmegaLin) -> OmegaLin:
        """``L_X form`` for X a frame index or a jet of frame components."""
        X = self._comp(X)
        fr = self.fr
        out = OmegaLin(fr.derive(X, form.coeffs))
        m = 2 * self.F.n
        for k in range(m):
            if not np.any(X.coeffs[k]):
                continue
            for j in range(self.F.n - 1):
                cj = form.coeffs[j]
                if not np.any(cj.coeffs):
                    continue
                out = out + self.lie_unit(k, j) * (X[k] * cj)
        return out

    def cyc(self, a, b, c) -> OmegaLin:
        """``Omega([a,b],c) + Omega([b,c],a) + Omega([c,a],b)`` for frame indices."""
        fr = self.fr
        return (
            self.omega(fr.br(a, b), fr.unit(c))
            + self.omega(fr.br(b, c), fr.unit(a))
            + self.omega(fr.br(c, a), fr.unit(b))
        )


def lie_derivative_omega(direction, target: OmegaLin, F: FramePack, eta: Jet | None = None, tolerances: Tolerances = Tolerances()) -> OmegaLin:
    return LieContext(F, eta, tolerances).lie(direction, target)


# reduced relation -----------------------------------------------------------------


@dataclass
class EtaPair:
    eta: Jet = field(repr=False)
    source: str  # "third-order" or "phi-prime"

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.eta.value, dtype=float)


def reduced_condition(F: FramePack, T: ThirdOrder | None = None) -> EtaPair:
    """``eta_1 = kappa^1_12 + theta^1_12``, ``eta_2 = kappa^2_12 + theta^2_12``."""
    if F.n != 3:
        raise ValueError("reduced relation implemented for n = 3")
    T = T or third_order_coeffs(F)
    J = T.jets
    eta1 = J[("kappa", 0, 1)] + J[("theta", 0, 0, 1)]
    # kappa^2_12 is the kappa formula with the roles of 1 and 2 exchanged
    eta2 = J[("kappa", 1, 0)] + J[("theta", 1, 0, 1)]
    return EtaPair(Jet.stack([eta1, eta2]), "third-order")


def eta_from_phi_prime(F: FramePack) -> EtaPair:
    """Relation from ``i_{Phi'} Omega (h_1, h_2) = 0``: ``-M^1_2 a_11 + M^2_1 a_22``."""
    M = phi_prime_frame(F)
    return EtaPair(Jet.stack([-M[0, 1], M[1, 0]]), "phi-prime")


def coeff1_form(F: FramePack, T: ThirdOrder | None = None, eta: Jet | None = None, i: int = 0, j: int = 1):
    """The third-order condition as ``(main, dropped)`` OmegaLin forms.

    ``main`` carries ``kappa^i a_ii + kappa^j a_jj + sum_k theta^k a_kk``;
    ``dropped`` is ``(lambda_j - lambda_i)(L_[h_j,v_j] a_ii - L_[h_i,v_i] a_jj)``,
    which is algebraic in the reducible case and is reported as a diagnostic.
    """
    T = T or third_order_coeffs(F)
    J = T.jets
    space = F.fields.space
    lam = F.eigenvalues
    coeffs = [Jet.zeros(space, (), F.order) for _ in range(F.n - 1)]
    coeffs[i] = coeffs[i] + J[("kappa", i, j)]
    coeffs[j] = coeffs[j] + J[("kappa", j, i)]
    for k in range(F.n - 1):
        coeffs[k] = coeffs[k] + J[("theta", k, i, j)]
    main = OmegaLin(Jet.stack(coeffs))
    dropped = None
    ctx = LieContext(F, None)
    fr = ctx.fr
    try:
        a_i = OmegaLin.unit(F, i)
        a_j = OmegaLin.unit(F, j)
        dropped = (
            ctx.lie(fr.br(fr.h(j), fr.v(j)), a_i) - ctx.lie(fr.br(fr.h(i), fr.v(i)), a_j)
        ) * (lam[j] - lam[i])
    except ValueError:
        # the bracket leaves D_j: not algebraic without the reduced relation
        dropped = None
    return main, dropped


# Theta ----------------------------------------------------------------------------------


def theta_matrix(F: FramePack, eta: Jet, tolerances: Tolerances = Tolerances(), tau5: str = "corrected"):
    """The 2x7 matrix ``(eta, eta^1, ..., eta^6)`` and its numeric rank.

    In the fifth expansion ``"corrected"`` uses ``(h_1 f_2) L_{v_2} a_22``, the
    term that makes it vanish on every closed Omega satisfying the relation;
    ``"uncorrected"`` keeps ``(h_1 f_1) a_22`` in its place, which does not.
    """
    ctx = LieContext(F, eta, tolerances)
    fr = ctx.fr
    h1, h2, v1, v2 = fr.h(0), fr.h(1), fr.v(0), fr.v(1)
    S, C = fr.h(2), fr.v(2)
    f1, f2 = eta[0], eta[1]
    a11, a22 = OmegaLin.unit(F, 0), OmegaLin.unit(F, 1)
    d = F.derive
    L = ctx.lie

    t1 = a11 * d(C, f1) + a22 * d(C, f2)
    t2 = (
        ctx.omega_ab(fr.br(S, v1), h1) * (2 * f1)
        + ctx.omega_ab(fr.br(S, v2), h2) * (2 * f2)
        + a11 * d(S, f1)
        + a22 * d(S, f2)
    )
    t3 = (
        a11 * d(v1, d(v2, f1))
        + a22 * d(v1, d(v2, f2))
        + L(fr.br(v1, v2), a22) * f2
        + L(v1, a11) * d(v2, f1)
        + ctx.cyc(v2, v1, h1) * d(v1, f1)
        + ctx.cyc(v1, v2, h2) * d(v2, f2)
        + L(v2, a22) * d(v1, f2)
        + L(v1, ctx.cyc(v2, v1, h1)) * f1
        - L(v2, ctx.cyc(v2, v1, h2)) * f2
    )
    t4 = (
        a11 * d(h1, d(h2, f1))
        + L(h1, a11) * d(h2, f1)
        + L(h2, a11) * d(h1, f1)
        + a22 * d(h1, d(h2, f2))
        + L(h1, a22) * d(h2, f2)
        + L(h2, a22) * d(h1, f2)
        + L(fr.br(h1, h2), a22) * f2
        + L(h1, ctx.cyc(h2, v1, h1)) * f1
        - L(h2, ctx.cyc(v2, h1, h2)) * f2
    )
    if tau5 == "uncorrected":
        t5_term = a22 * d(h1, f1)
    elif tau5 == "corrected":
        t5_term = L(v2, a22) * d(h1, f2)
    else:
        raise ValueError("tau5 must be 'corrected' or 'uncorrected'")
    t5 = (
        a11 * d(h1, d(v2, f1))
        + L(h1, a11) * d(v2, f1)
        + L(v2, a11) * d(h1, f1)
        + a22 * d(h1, d(v2, f2))
        + L(h1, a22) * d(v2, f2)
        + L(h1, ctx.cyc(v2, v1, h1)) * f1
        + t5_term
        + L(fr.br(h1, v2), a22) * f2
        - L(v2, ctx.cyc(v2, h1, h2)) * f2
    )
    t6 = (
        a11 * d(v1, d(h2, f1))
        + L(v1, a11) * d(h2, f1)
        + L(h2, a11) * d(v1, f1)
        + a22 * d(v1, d(h2, f2))
        + L(v1, a22) * d(h2, f2)
        + L(v1, ctx.cyc(h2, v1, h1)) * f1
        + L(h2, a22) * d(v1, f2)
        + L(fr.br(v1, h2), a22) * f2
        - L(h2, ctx.cyc(v2, v1, h2)) * f2
    )
    cols = [np.asarray(eta.value, dtype=float)] + [t.value for t in (t1, t2, t3, t4, t5, t6)]
    Theta = np.stack(cols, axis=1)
    sv = np.linalg.svd(Theta, compute_uv=False)
    if sv[0] == 0.0:
        rank = 0
    else:
        rank = 1 if sv[1] <= tolerances.rank_tol * sv[0] else 2
    return Theta, rank, sv


# reports and verdicts -----------------------------------------------------------


@dataclass
class ConditionReport:
    point: dict
    classification: Classification
    eigenvalues: list | None = None
    phi_norm: float | None = None
    cond1_residual: float | None = None
    cond1_passed: bool | None = None
    A: float | None = None
    B: float | None = None
    phi_prime_normal: list | None = None
    kappa: dict | None = None
    theta: dict | None = None
    beta: dict | None = None
    gamma: dict | None = None
    reducible: bool | None = None
    involutivity_residual: float | None = None
    eta: list | None = None
    eta_source: str | None = None
    eta_zero: list | None = None
    eta_dropped_terms: list | None = None
    theta_matrix: list | None = None
    theta_rank: int | None = None
    theta_singular_values: list | None = None
    verdict: Verdict = Verdict.INCONCLUSIVE
    reasons: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, Enum):
                return v.value
            if isinstance(v, dict):
                return {_key(k): conv(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            if isinstance(v, np.ndarray):
                return conv(v.tolist())
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            return v

        return {k: conv(getattr(self, k)) for k in self.__dataclass_fields__}


def _key(k) -> str:
    if isinstance(k, tuple):
        return ",".join(str(i + 1) for i in k)
    return str(k)


def verdict(r: ConditionReport) -> tuple[Verdict, list[str]]:
    """Decision tree on the recorded fields of one point."""
    reasons: list[str] = []
    cls = r.classification
    if cls in (Classification.FLAT, Classification.ISOTROPIC):
        return Verdict.ISOTROPIC, [f"{cls.value} curvature"]
    if cls is Classification.DEGENERATE:
        return Verdict.INCONCLUSIVE, ["Jacobi eigenvalues not pairwise distinct"]
    if r.reducible is None:
        return Verdict.INCONCLUSIVE, reasons + ["third-order coefficients unavailable"]
    if not r.reducible:
        return Verdict.INCONCLUSIVE, ["third-order condition is not reducible"]
    zero = r.eta_zero or [False, False]
    if r.cond1_passed and all(zero):
        return Verdict.THM44, ["Phi' in span{J, Phi}", "third-order condition identically zero"]
    reasons.append("Phi' in span{J, Phi}" if r.cond1_passed else "Phi' not in span{J, Phi}")
    if any(zero):
        return Verdict.NOT, reasons + ["one coefficient of the reduced relation vanishes"]
    if r.theta_rank is None:
        return Verdict.INCONCLUSIVE, reasons + ["Theta unavailable"]
    if r.theta_rank != 1:
        return Verdict.NOT, reasons + [f"rank Theta = {r.theta_rank}"]
    if r.eta[0] * r.eta[1] >= 0:
        return Verdict.NOT, reasons + ["eta_1 * eta_2 >= 0"]
    return Verdict.FINAL, reasons + ["eta_1 * eta_2 < 0", "rank Theta = 1"]


def _point_dict(u: PointTM | None) -> dict:
    if u is None:
        return {}
    return {"x": [float(v) for v in u.x], "y": [float(v) for v in u.y]}


def analyze_frame(
    F: FramePack,
    tolerances: Tolerances = Tolerances(),
    F_high: FramePack | None = None,
    point: dict | None = None,
    tau5: str = "corrected",
    relation: Jet | None = None,
) -> ConditionReport:
    """All conditions on a generic-distinct frame; ``F_high`` (order >= 6) feeds Theta.

    ``relation`` supplies ``(eta_1, eta_2)`` directly (jets on ``F_high``, or on
    ``F`` when no ``F_high`` is given); synthetic fixtures use it.
    """
    r = ConditionReport(point=point or {}, classification=Classification.GENERIC)
    r.eigenvalues = F.lambdas.tolist()
    fit = cond_phi_prime_span(F)
    r.A, r.B, r.cond1_residual = fit.A, fit.B, fit.residual
    r.cond1_passed = fit.passed(tolerances.tol)
    r.phi_prime_normal = fit.normal_component.tolist()
    if F.n != 3:
        r.reasons = ["verdict logic implemented for n = 3 only"]
        return r
    T = third_order_coeffs(F)
    r.kappa, r.theta, r.beta, r.gamma = T.kappa, T.theta, T.beta, T.gamma
    try:
        red = reducibility(T, F, tolerances)
    except InconsistentReducibility as exc:
        r.reasons = [str(exc)]
        return r
    r.reducible = red.reducible
    r.involutivity_residual = red.involutivity_residual
    if red.reducible:
        if relation is not None:
            pair = EtaPair(relation, "supplied")
        else:
            pair = reduced_condition(F, T) if r.cond1_passed else eta_from_phi_prime(F)
        r.eta = pair.values.tolist()
        r.eta_source = pair.source
        bound = tolerances.tol * _scale(F)
        r.eta_zero = [bool(abs(e) <= bound) for e in r.eta]
        _, dropped = coeff1_form(F, T)
        if dropped is not None:
            r.eta_dropped_terms = dropped.value.tolist()
        needs_theta = not all(r.eta_zero) and not any(r.eta_zero)
        if needs_theta and (F_high is not None or relation is not None):
            F_high = F_high or F
            if relation is not None:
                pair_high = EtaPair(relation, "supplied")
            elif r.cond1_passed:
                pair_high = reduced_condition(F_high, third_order_coeffs(F_high))
            else:
                pair_high = eta_from_phi_prime(F_high)
            try:
                Theta, rank, sv = theta_matrix(F_high, pair_high.eta, tolerances, tau5)
                r.theta_matrix = Theta.tolist()
                r.theta_rank = rank
                r.theta_singular_values = sv.tolist()
            except EtaZero as exc:
                r.reasons.append(str(exc))
    v, reasons = verdict(r)
    r.verdict = v
    r.reasons = r.reasons + reasons
    return r


def analyze_point(
    spray: SprayModel,
    u: PointTM,
    tolerances: Tolerances = Tolerances(),
    order: int = ORDER_BASIC,
    theta_order: int = ORDER_THETA,
    scales=None,
    permutation=None,
) -> ConditionReport:
    """Full per-point pipeline for a spray."""
    g = PointGeometry(spray, u, order)
    J = jacobi(spray, u, geom=g)
    cls, info = classify(J.Phi, u.y, tolerances)
    r = ConditionReport(point=_point_dict(u), classification=cls, phi_norm=info["phi_norm"])
    if "eigenvalues" in info:
        r.eigenvalues = info["eigenvalues"]
    if cls is not Classification.GENERIC:
        v, reasons = verdict(r)
        r.verdict, r.reasons = v, [info["reason"]] + reasons if "reason" in info else reasons
        return r
    try:
        F = eigenframe(J, spray, u, geom=g, tolerances=tolerances, scales=scales, permutation=permutation)
    except (EigenvalueCollision, ComplexEigenvalues) as exc:
        r.classification = Classification.DEGENERATE
        r.verdict, r.reasons = Verdict.INCONCLUSIVE, [str(exc)]
        return r

    def high():
        gh = PointGeometry(spray, u, theta_order)
        return eigenframe(None, spray, u, geom=gh, tolerances=tolerances, scales=scales, permutation=permutation)

    report = analyze_frame(F, tolerances, point=r.point)
    if report.theta_rank is None and report.reducible and report.eta_zero and not any(report.eta_zero):
        report = analyze_frame(F, tolerances, F_high=high(), point=r.point)
    report.phi_norm = r.phi_norm
    return report


def aggregate(reports: list[ConditionReport]) -> tuple[Verdict, list[str]]:
    """Fold per-point verdicts (in point order) into one verdict for the spray."""
    if not reports:
        return Verdict.INCONCLUSIVE, ["no sample points"]
    verdicts = [r.verdict for r in reports]
    reasons: list[str] = []
    if any(v is Verdict.NOT for v in verdicts):
        idx = [i for i, v in enumerate(verdicts) if v is Verdict.NOT]
        return Verdict.NOT, [f"not metrizable at {len(idx)} of {len(reports)} points (first: {idx[0]})"]
    distinct = set(verdicts)
    if len(distinct) == 1:
        v = verdicts[0]
        return v, [f"all {len(reports)} points agree"]
    counts = {v.value: verdicts.count(v) for v in distinct}
    reasons.append(f"points disagree: {counts}")
    return Verdict.INCONCLUSIVE, reasons
