"""Pointwise spray geometry: connection, curvature, Jacobi endomorphism, eigenframe.

Conventions
-----------
The spray is ``S = y^i d/dx^i + f^i(x, y) d/dy^i`` (geodesics ``x'' = f``).
Coordinates on TM are ordered ``(x^1..x^n, y^1..y^n)``; a vector field is a
jet of shape ``(2n,)`` in that coordinate frame.

* connection ``N^i_j = -1/2 df^i/dy^j``, horizontal frame
  ``delta_j = d/dx^j - N^k_j d/dy^k``;
* Jacobi endomorphism
  ``Phi^i_j = -df^i/dx^j - N^i_l N^l_j - S(N^i_j)``, acting as
  ``Phi(delta_j) = Phi^i_j d/dy^i``;
* curvature ``R^i_jk`` = ``d/dy^i`` component of ``[delta_j, delta_k]``, which
  satisfies ``y^j R^i_jk = Phi^i_k`` (checked at runtime, not assumed).

The adapted frame is ``h_i = p_i^j delta_j`` and ``v_i = p_i^j d/dy^j`` where
``p_i`` is an eigenvector of the matrix ``Phi``; ``h_n = S`` (``p_n = y``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exprlang import SprayModel
from .jets import Jet, JetSpace, PointTM

__all__ = [
    "GeometryError",
    "EigenvalueCollision",
    "ComplexEigenvalues",
    "Tolerances",
    "Connection",
    "JacobiEnd",
    "CurvatureR",
    "FramePack",
    "PointGeometry",
    "connection",
    "jacobi",
    "curvature",
    "eigenframe",
    "frame_brackets",
    "dyn_cov_derivative",
    "bracket",
    "jet_inverse",
    "eigvec_first_order",
    "DEFAULT_ORDER",
]

DEFAULT_ORDER = 4


class GeometryError(ArithmeticError):
    pass


class EigenvalueCollision(GeometryError):
    """Jacobi eigenvalues are not pairwise separated at the point."""

    def __init__(self, message, eigenvalues=None, gap=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues
        self.gap = gap


class ComplexEigenvalues(GeometryError):
    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


@dataclass(frozen=True)
class Tolerances:
    tol: float = 1e-8  # absolute and relative residual tolerance
    sep_tol: float = 1e-7  # relative eigenvalue separation (times ||Phi||)
    rank_tol: float = 1e-6  # sigma_2 / sigma_1 threshold for rank of Theta

    def bound(self, scale: float) -> float:
        return self.tol * (1.0 + scale)


# vector-field helpers ---------------------------------------------------------


def bracket(X: Jet, Y: Jet) -> Jet:
    """Lie bracket ``[X, Y]^a = X(Y^a) - Y(X^a)`` of coordinate vector fields."""
    return Y.gradient() @ X - X.gradient() @ Y


def jet_inverse(M: Jet) -> Jet:
    """Inverse of a square jet matrix (Neumann series about the base value)."""
    M0 = M.coeffs[..., 0]
    inv0 = np.linalg.inv(M0)
    A = Jet.const(M.space, inv0, M.order)
    rest = Jet(M.space, M.coeffs.copy(), M.order)
    rest.coeffs[..., 0] = 0.0
    # (M0 + R)^{-1} = sum_k (-M0^{-1} R)^k M0^{-1}
    step = -(A @ rest)
    result = A
    term = A
    for _ in range(M.order):
        term = step @ term
        result = result + term
    return result


def eigvec_first_order(A0, dA, index: int):
    """First-order change of a simple eigenpair under ``A0 -> A0 + t dA``.

    Uses the left/right eigenvector formula for a unit-norm right
    eigenvector; returns ``(dlambda, dvec)``.
    """
    w, V = np.linalg.eig(A0)
    w, V = w.real, V.real
    WL = np.linalg.inv(V)  # rows are left eigenvectors with WL @ V = I
    v = V[:, index] / np.linalg.norm(V[:, index])
    lam = w[index]
    dlam = WL[index] @ dA @ V[:, index] / (WL[index] @ V[:, index])
    dv = np.zeros_like(v)
    for k in range(len(w)):
        if k == index:
            continue
        dv += (WL[k] @ dA @ v) / (lam - w[k]) * V[:, k]
    dv -= (v @ dv) * v  # keep |v| = 1 to first order
    return dlam, dv


# geometric objects ----------------------------------------------------------------


@dataclass
class Connection:
    N: np.ndarray
    jet: Jet = field(repr=False)
    homogeneity_residual: float
    horizontality_residual: float


@dataclass
class JacobiEnd:
    Phi: np.ndarray
    jet: Jet = field(repr=False)
    annihilation_residual: float  # |Phi y|
    homogeneity_residual: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.Phi))


@dataclass
class CurvatureR:
    R: np.ndarray  # R[i, j, k]
    contraction_residual: float  # |y^j R^i_jk - Phi^i_k|
    jacobi_bracket_residual: float  # |R - (1/3)[J, Phi]|
    skew_residual: float


class PointGeometry:
    """All jets of the spray geometry at one point, computed on demand."""

    def __init__(self, spray: SprayModel, u: PointTM, order: int = DEFAULT_ORDER):
        if order < 2:
            raise ValueError("need jet order >= 2 for curvature")
        self.spray = spray
        self.u = u
        self.n = spray.n
        self.order = order
        self.space = JetSpace.get(2 * self.n, order)

    @cached_property
    def f(self) -> Jet:
        return self.spray.jets(self.u, self.order)

    @cached_property
    def y(self) -> Jet:
        n = self.n
        c = np.zeros((n, self.space.size))
        c[:, 0] = self.u.y
        if self.order >= 1:
            for k in range(n):
                c[k, 1 + n + k] = 1.0
        return Jet(self.space, c)

    @cached_property
    def S(self) -> Jet:
        """Spray as a vector field on TM."""
        return Jet.stack([*self.y, *self.f])

    @cached_property
    def C(self) -> Jet:
        zero = Jet.zeros(self.space, (self.n,))
        return Jet.stack([*zero, *self.y])

    @cached_property
    def N(self) -> Jet:
        n = self.n
        cols = [self.f.diff(n + j) * -0.5 for j in range(n)]
        return Jet.stack(cols, axis=-1)  # N[i, j]

    def horizontal_lift(self, p: Jet) -> Jet:
        """``p^j delta_j`` for a jet vector ``p`` of shape ``(n,)``."""
        return Jet.stack([*p, *(-(self.N @ p))])

    def vertical_lift(self, p: Jet) -> Jet:
        zero = Jet.zeros(self.space, (self.n,), p.order)
        return Jet.stack([*zero, *p])

    def along(self, X: Jet, g: Jet) -> Jet:
        """Derivative of (array-valued) jet ``g`` along vector field ``X``."""
        return g.directional(X)

    @cached_property
    def Phi(self) -> Jet:
        n = self.n
        dfdx = Jet.stack([self.f.diff(j) for j in range(n)], axis=-1)
        SN = self.N.directional(self.S)
        return -dfdx - self.N @ self.N - SN

    @cached_property
    def deltas(self) -> list[Jet]:
        n = self.n
        eye = np.eye(n)
        return [self.horizontal_lift(Jet.const(self.space, eye[j])) for j in range(n)]

    def phi_on(self, X: Jet) -> Jet:
        """``Phi(X)`` for a vector field ``X`` on TM (semibasic action)."""
        return self.vertical_lift(self.Phi @ Jet.stack(list(X)[: self.n]))

    def vertical_part(self, X: Jet) -> Jet:
        n = self.n
        xs = Jet.stack(list(X)[:n])
        ys = Jet.stack(list(X)[n:])
        return self.vertical_lift(ys + self.N @ xs)

    def horizontal_part(self, X: Jet) -> Jet:
        return self.horizontal_lift(Jet.stack(list(X)[: self.n]))


def _euler(jet: Jet, u: PointTM, degree: int) -> float:
    """max |sum_k y^k d/dy^k g - degree*g| over the entries of an array jet."""
    n = u.n
    total = sum(u.y[k] * jet.derivative(tuple(int(v == n + k) for v in range(2 * n))) for k in range(n))
    return float(np.max(np.abs(total - degree * np.asarray(jet.value))))


def connection(S: SprayModel, u: PointTM, order: int = DEFAULT_ORDER, geom: PointGeometry | None = None) -> Connection:
    g = geom or PointGeometry(S, u, order)
    N = g.N
    hS = g.horizontal_part(g.S)
    return Connection(
        N=np.asarray(N.value),
        jet=N,
        homogeneity_residual=_euler(N, u, 1),
        horizontality_residual=float(np.max(np.abs(hS.value - g.S.value))),
    )


def jacobi(S: SprayModel, u: PointTM, order: int = DEFAULT_ORDER, geom: PointGeometry | None = None) -> JacobiEnd:
    g = geom or PointGeometry(S, u, order)
    Phi = g.Phi
    Phi0 = np.asarray(Phi.value)
    return JacobiEnd(
        Phi=Phi0,
        jet=Phi,
        annihilation_residual=float(np.max(np.abs(Phi0 @ np.array(u.y)))),
        homogeneity_residual=_euler(Phi, u, 2),
    )


def curvature(S: SprayModel, u: PointTM, order: int = DEFAULT_ORDER, geom: PointGeometry | None = None) -> CurvatureR:
    g = geom or PointGeometry(S, u, order)
    n = g.n
    d = g.deltas
    R = np.zeros((n, n, n))
    for j in range(n):
        for k in range(j + 1, n):
            b = bracket(d[j], d[k])
            comp = np.asarray(b.value)[n:]
            R[:, j, k] = comp
            R[:, k, j] = -comp
    Phi0 = np.asarray(g.Phi.value)
    contraction = np.einsum("j,ijk->ik", np.array(u.y), R)
    # coordinate form of (1/3)[J, Phi]: (1/3)(dPhi^i_k/dy^j - dPhi^i_j/dy^k)
    dPhi = np.stack([np.asarray(g.Phi.diff(n + j).value) for j in range(n)])  # [j, i, k]
    third = (np.einsum("jik->ijk", dPhi) - np.einsum("kij->ijk", dPhi)) / 3.0
    return CurvatureR(
        R=R,
        contraction_residual=float(np.max(np.abs(contraction - Phi0))),
        jacobi_bracket_residual=float(np.max(np.abs(R - third))),
        skew_residual=float(np.max(np.abs(R + np.swapaxes(R, 1, 2)))),
    )


# eigenframe -------------------------------------------------------------------


def _normalize_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v if v[k] > 0 else -v


def _eigen_jet(Phi: Jet, lam0: float, p0: np.ndarray, iterations: int) -> tuple[Jet, Jet]:
    """Jet-level simple eigenpair with ``|p| = 1`` by chord iteration.

    Each pass solves the bordered linearization at the base point, gaining at
    least one order; ``order + 1`` passes make the pair exact to jet order.
    """
    n = Phi.shape[0]
    space = Phi.space
    Phi0 = np.asarray(Phi.value)
    bordered = np.zeros((n + 1, n + 1))
    bordered[:n, :n] = Phi0 - lam0 * np.eye(n)
    bordered[:n, n] = -p0
    bordered[n, :n] = 2.0 * p0
    solve = np.linalg.inv(bordered)
    p = Jet.const(space, p0, Phi.order)
    lam = Jet.const(space, lam0, Phi.order)
    for _ in range(iterations):
        r = Phi @ p - p * lam
        s = (p * p).sum() - 1.0
        rhs = np.concatenate([r.coeffs, s.coeffs[None, :]], axis=0)
        upd = -solve @ rhs
        p = p + Jet(space, upd[:n], Phi.order)
        lam = lam + Jet(space, upd[n], Phi.order)
    return lam, p


@dataclass
class FramePack:
    """Adapted frame data at one point.

    ``fields[a]`` is the a-th frame vector field ``e_a`` in coordinates, with
    ``e_0..e_{n-1} = h_1..h_n`` and ``e_n..e_{2n-1} = v_1..v_n``;
    ``coframe[a]`` is the dual 1-form.  ``eigenvalues`` are jets of the
    eigenfunctions with ``lambda_n = 0``.
    """

    n: int
    fields: Jet
    eigenvalues: Jet
    geometry: PointGeometry | None = None
    P: np.ndarray | None = None  # columns: coordinate eigenvectors at the point
    label_order: tuple[int, ...] = ()

    @property
    def order(self) -> int:
        return self.fields.order

    @property
    def lambdas(self) -> np.ndarray:
        return np.asarray(self.eigenvalues.value)

    @cached_property
    def coframe(self) -> Jet:
        E = self.fields.T  # columns are frame vectors
        return jet_inverse(E)

    def h(self, i: int) -> Jet:
        return self.fields[i]

    def v(self, i: int) -> Jet:
        return self.fields[self.n + i]

    def components(self, X: Jet) -> Jet:
        """Frame components (xi^1..xi^n, nu^1..nu^n) of a vector field."""
        return self.coframe @ X

    def derive(self, a: int, g: Jet) -> Jet:
        """Lie derivative of a scalar (or array) jet along frame field ``a``."""
        return g.directional(self.fields[a])

    @cached_property
    def structure(self) -> Jet:
        """``structure[a, b, k]``: k-th frame component of ``[e_a, e_b]``."""
        m = 2 * self.n
        space = self.fields.space
        order = self.fields.order - 1
        out = Jet.zeros(space, (m, m, m), order)
        coeffs = out.coeffs.copy()
        for a in range(m):
            for b in range(a + 1, m):
                c = self.components(bracket(self.fields[a], self.fields[b]))
                coeffs[a, b] = c.coeffs
                coeffs[b, a] = -c.coeffs
                order = min(order, c.order)
        return Jet(space, coeffs, order)

    def bracket_field(self, a: int, b: int) -> Jet:
        return bracket(self.fields[a], self.fields[b])

    def combo(self, comps: Jet) -> Jet:
        """Vector field ``sum_k comps[k] e_k``."""
        return self.fields.T @ comps

    @classmethod
    def from_fields(cls, fields: Jet, eigenvalues: Jet) -> "FramePack":
        """Frame pack from explicit vector fields (used for synthetic fixtures)."""
        m = fields.shape[0]
        if fields.shape != (m, m) or m % 2:
            raise ValueError("need 2n vector fields on a 2n-dimensional space")
        return cls(n=m // 2, fields=fields, eigenvalues=eigenvalues)


def eigenframe(
    Phi: JacobiEnd | None,
    S: SprayModel,
    u: PointTM,
    order: int = DEFAULT_ORDER,
    tolerances: Tolerances = Tolerances(),
    scales=None,
    permutation=None,
    geom: PointGeometry | None = None,
) -> FramePack:
    """Adapted eigenframe ``{h_i, v_i}`` of the Jacobi endomorphism at ``u``.

    ``scales`` multiplies the first ``n-1`` unit eigenvectors by constants and
    ``permutation`` relabels them; both exist to test invariance of the
    downstream conditions.
    """
    g = geom or PointGeometry(S, u, order)
    n = g.n
    PhiJ = g.Phi
    Phi0 = np.asarray(PhiJ.value)
    norm = float(np.linalg.norm(Phi0))
    w, V = np.linalg.eig(Phi0)
    scale = max(norm, 1e-300)
    if np.max(np.abs(w.imag)) > tolerances.tol * (1.0 + scale):
        raise ComplexEigenvalues("Jacobi endomorphism has complex eigenvalues", w)
    w, V = w.real, V.real
    y0 = np.array(u.y)
    # the eigenvector most aligned with y carries lambda_n = 0
    cosines = [abs(V[:, k] @ y0) / (np.linalg.norm(V[:, k]) * np.linalg.norm(y0)) for k in range(n)]
    kz = int(np.argmax(cosines))
    others = [k for k in range(n) if k != kz]
    others.sort(key=lambda k: w[k])
    lam_all = np.array([w[k] for k in others] + [0.0])
    gaps = [abs(a - b) for i, a in enumerate(lam_all) for b in lam_all[i + 1 :]]
    min_gap = min(gaps) if gaps else math.inf
    if not min_gap > tolerances.sep_tol * norm or norm == 0.0:
        raise EigenvalueCollision(
            f"eigenvalues not separated (min gap {min_gap:.3e})", lam_all, min_gap
        )
    if permutation is not None:
        perm = list(permutation)
        if sorted(perm) != list(range(n - 1)):
            raise ValueError("permutation must reorder the first n-1 eigen-slots")
        others = [others[p] for p in perm]
    scales = np.ones(n - 1) if scales is None else np.asarray(scales, dtype=float)
    space = g.space
    lams, ps, P = [], [], np.zeros((n, n))
    for slot, k in enumerate(others):
        p0 = _normalize_sign(V[:, k] / np.linalg.norm(V[:, k]))
        lam, p = _eigen_jet(PhiJ, float(w[k]), p0, PhiJ.order + 1)
        p = p * scales[slot]
        lams.append(lam)
        ps.append(p)
        P[:, slot] = np.asarray(p.value)
    lams.append(Jet.zeros(space, (), PhiJ.order))
    ps.append(g.y)
    P[:, n - 1] = y0
    hs = [g.horizontal_lift(p) for p in ps]
    vs = [g.vertical_lift(p) for p in ps]
    fields = Jet.stack(hs + vs)
    return FramePack(
        n=n,
        fields=fields,
        eigenvalues=Jet.stack(lams),
        geometry=g,
        P=P,
        label_order=tuple(others),
    )


def frame_brackets(S: SprayModel | None, u: PointTM | None, F: FramePack) -> np.ndarray:
    """Values at the point of all structure functions, ``c[a, b, k]``."""
    return np.asarray(F.structure.value)


def phi_prime_frame(F: FramePack) -> Jet:
    """Matrix ``M[k, i]`` with ``Phi'(h_i) = sum_k M[k, i] v_k``.

    Uses ``Phi'(h_i) = S(lambda_i) v_i + lambda_i v[S, v_i] - Phi(h[S, h_i])``
    with ``S = h_n``.
    """
    n = F.n
    c = F.structure
    lam = F.eigenvalues
    s = n - 1
    rows = []
    for i in range(n):
        col = []
        for k in range(n):
            term = lam[i] * c[s, n + i, n + k] - lam[k] * c[s, i, k]
            if k == i:
                term = term + F.derive(s, lam[i])
            col.append(term)
        rows.append(Jet.stack(col))
    return Jet.stack(rows, axis=-1)  # [k, i]


def dyn_cov_derivative(S: SprayModel | None, u: PointTM | None, F: FramePack) -> np.ndarray:
    """Semibasic dynamical covariant derivative ``Phi' = v o [S, Phi] o h`` in the frame."""
    M = np.asarray(phi_prime_frame(F).value)
    return M


def phi_prime_coordinates(g: PointGeometry) -> np.ndarray:
    """``Phi'`` as a coordinate matrix via brackets: ``Phi'(delta_j) = (Phi')^i_j d/dy^i``."""
    n = g.n
    out = np.zeros((n, n))
    for j, d in enumerate(g.deltas):
        t = bracket(g.S, g.phi_on(d)) - g.phi_on(bracket(g.S, d))
        out[:, j] = np.asarray(g.vertical_part(t).value)[n:]
    return out
