"""Truncated multivariate Taylor series ("jets") over numpy arrays.

A :class:`Jet` stores Taylor coefficients ``d^a f / a!`` for every multi-index
``a`` with ``|a| <= order``, enumerated graded-lexicographically by a shared
:class:`JetSpace`.  Coefficient arrays may carry leading axes, so a single
``Jet`` can hold a vector or matrix of series; arithmetic broadcasts over those
axes the way numpy does.

Differentiating a jet lowers its valid order by one.  Every jet carries the
order up to which its coefficients are exact, and binary operations keep the
smaller of the two orders.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

__all__ = [
    "JetSpace",
    "Jet",
    "PointTM",
    "JetError",
    "DivisionByZeroJet",
    "DomainError",
    "OrderExceeded",
    "seed",
    "constant",
    "derivative",
    "compose_fn",
]


class JetError(ArithmeticError):
    """Base class for jet arithmetic failures."""


class DivisionByZeroJet(JetError, ZeroDivisionError):
    pass


class DomainError(JetError, ValueError):
    """A function was applied outside its real domain at the expansion point."""


class OrderExceeded(JetError, IndexError):
    pass


def _multi_indices(nvars: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices with ``|a| <= order`` in graded-lex order."""
    out: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        # lexicographically descending compositions of deg, e.g. (2,0),(1,1),(0,2)
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            a = [0] * nvars
            for v in combo:
                a[v] += 1
            out.append(tuple(a))
    return out


@functools.lru_cache(maxsize=None)
def _space(nvars: int, order: int) -> "JetSpace":
    return JetSpace._build(nvars, order)


@dataclass(frozen=True, eq=False)
class JetSpace:
    """Index tables shared by all jets with the same ``nvars`` and ``order``.

    Use :meth:`get`; instances are cached so identity comparison is enough.
    """

    nvars: int
    order: int
    indices: tuple[tuple[int, ...], ...]
    position: dict[tuple[int, ...], int] = field(repr=False)
    degree: np.ndarray = field(repr=False)
    factorial: np.ndarray = field(repr=False)
    _mul_a: np.ndarray = field(repr=False)
    _mul_b: np.ndarray = field(repr=False)
    _mul_scatter: sp.csr_matrix = field(repr=False)
    _shift: np.ndarray = field(repr=False)
    _shift_scale: np.ndarray = field(repr=False)

    @staticmethod
    def get(nvars: int, order: int) -> "JetSpace":
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        return _space(nvars, order)

    @classmethod
    def _build(cls, nvars: int, order: int) -> "JetSpace":
        indices = _multi_indices(nvars, order)
        position = {a: i for i, a in enumerate(indices)}
        degree = np.array([sum(a) for a in indices], dtype=int)
        factorial = np.array(
            [math.prod(math.factorial(k) for k in a) for a in indices], dtype=float
        )
        ia, ib, ic = [], [], []
        for i, a in enumerate(indices):
            da = degree[i]
            for j, b in enumerate(indices):
                if da + degree[j] > order:
                    continue
                ia.append(i)
                ib.append(j)
                ic.append(position[tuple(x + y for x, y in zip(a, b))])
        npairs = len(ia)
        scatter = sp.csr_matrix(
            (np.ones(npairs), (np.arange(npairs), np.array(ic))),
            shape=(npairs, len(indices)),
        )
        # shift[v, i] = position of indices[i] + e_v (or -1); used by derivatives
        shift = -np.ones((nvars, len(indices)), dtype=int)
        shift_scale = np.zeros((nvars, len(indices)))
        for i, a in enumerate(indices):
            for v in range(nvars):
                b = list(a)
                b[v] += 1
                j = position.get(tuple(b))
                if j is not None:
                    shift[v, i] = j
                    shift_scale[v, i] = b[v]
        return cls(
            nvars=nvars,
            order=order,
            indices=tuple(indices),
            position=position,
            degree=degree,
            factorial=factorial,
            _mul_a=np.array(ia, dtype=int),
            _mul_b=np.array(ib, dtype=int),
            _mul_scatter=scatter,
            _shift=shift,
            _shift_scale=shift_scale,
        )

    @property
    def size(self) -> int:
        return len(self.indices)

    def mask(self, order: int) -> np.ndarray:
        return self.degree <= order

    # raw coefficient kernels -------------------------------------------------

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = np.broadcast_arrays(a, b)
        lead = a.shape[:-1]
        prod = a[..., self._mul_a] * b[..., self._mul_b]
        flat = prod.reshape(-1, prod.shape[-1])
        out = (self._mul_scatter.T @ flat.T).T
        return np.asarray(out).reshape(lead + (self.size,))

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Matrix product of jet matrices shaped ``(..., m, k, size)``."""
        pa = a[..., self._mul_a]
        pb = b[..., self._mul_b]
        prod = np.einsum("...ijp,...jkp->...ikp", pa, pb)
        lead = prod.shape[:-1]
        flat = prod.reshape(-1, prod.shape[-1])
        out = (self._mul_scatter.T @ flat.T).T
        return np.asarray(out).reshape(lead + (self.size,))

    def diff(self, a: np.ndarray, var: int) -> np.ndarray:
        idx = self._shift[var]
        valid = idx >= 0
        out = np.zeros_like(a)
        out[..., valid] = a[..., idx[valid]] * self._shift_scale[var, valid]
        return out


class Jet:
    """Truncated Taylor expansion (possibly array-valued) at a point.

    ``coeffs`` has shape ``shape + (space.size,)``; ``order`` is the degree up
    to which the coefficients are exact (``order <= space.order``).
    """

    __slots__ = ("space", "coeffs", "order")
    __array_priority__ = 100

    def __init__(self, space: JetSpace, coeffs, order: int | None = None):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1:] != (space.size,):
            raise ValueError(
                f"coefficient array must end with axis of size {space.size}"
            )
        if order is None:
            order = space.order
        if order < 0:
            raise OrderExceeded("jet order dropped below zero")
        if order < space.order:
            coeffs = np.where(space.mask(order), coeffs, 0.0)
        self.space = space
        self.coeffs = coeffs
        self.order = int(order)

    # construction helpers ----------------------------------------------------

    @classmethod
    def zeros(cls, space: JetSpace, shape=(), order=None) -> "Jet":
        return cls(space, np.zeros(tuple(shape) + (space.size,)), order)

    @classmethod
    def const(cls, space: JetSpace, value, order=None) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (space.size,))
        c[..., 0] = value
        return cls(space, c, order)

    @classmethod
    def stack(cls, jets, axis: int = 0) -> "Jet":
        jets = list(jets)
        space = jets[0].space
        order = min(j.order for j in jets)
        ax = axis if axis >= 0 else axis - 1
        return cls(space, np.stack([j.coeffs for j in jets], axis=ax), order)

    # array protocol ----------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v

    def __len__(self) -> int:
        return self.shape[0]

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if Ellipsis in key or len(key) > len(self.shape):
            raise IndexError("jets are indexed over their leading axes only")
        return Jet(self.space, self.coeffs[key], self.order)

    def __iter__(self):
        for i in range(self.shape[0]):
            yield self[i]

    @property
    def T(self) -> "Jet":
        return Jet(self.space, np.swapaxes(self.coeffs, -2, -3), self.order)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.space, self.coeffs.reshape(tuple(shape) + (self.space.size,)), self.order)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            c = self.coeffs.reshape(-1, self.space.size).sum(axis=0)
        else:
            ax = axis if axis >= 0 else axis - 1
            c = self.coeffs.sum(axis=ax)
        return Jet(self.space, c, self.order)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderExceeded(f"cannot raise order {self.order} to {order}")
        return Jet(self.space, self.coeffs, order)

    # arithmetic --------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets live in different spaces")
            return other
        return Jet.const(self.space, other, self.space.order)

    def __add__(self, other) -> "Jet":
        other = self._coerce(other)
        return Jet(self.space, self.coeffs + other.coeffs, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.space, -self.coeffs, self.order)

    def __sub__(self, other) -> "Jet":
        other = self._coerce(other)
        return Jet(self.space, self.coeffs - other.coeffs, min(self.order, other.order))

    def __rsub__(self, other) -> "Jet":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            scale = np.asarray(other, dtype=float)[..., None]
            return Jet(self.space, self.coeffs * scale, self.order)
        other = self._coerce(other)
        return Jet(
            self.space,
            self.space.mul(self.coeffs, other.coeffs),
            min(self.order, other.order),
        )

    __rmul__ = __mul__

    def __matmul__(self, other: "Jet") -> "Jet":
        other = self._coerce(other)
        a, b = self.coeffs, other.coeffs
        vec = b.ndim == a.ndim - 1
        if vec:
            b = b[..., None, :]
        out = self.space.matmul(a, b)
        if vec:
            out = out[..., 0, :]
        return Jet(self.space, out, min(self.order, other.order))

    def reciprocal(self) -> "Jet":
        c0 = self.coeffs[..., 0]
        if np.any(c0 == 0.0):
            raise DivisionByZeroJet("reciprocal of a jet with zero constant term")
        # 1/(c0 + r) = (1/c0) sum_k (-r/c0)^k, r nilpotent of index order+1
        q = self * (1.0 / c0)
        r = q - Jet.const(self.space, np.ones_like(c0))
        result = Jet.const(self.space, np.ones_like(c0))
        term = Jet.const(self.space, np.ones_like(c0))
        for _ in range(self.order):
            term = term * (-r)
            result = result + term
        return Jet(self.space, result.coeffs * (1.0 / c0)[..., None], self.order)

    def __truediv__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0.0):
                raise DivisionByZeroJet("division by zero constant")
            return self * (1.0 / other)
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other) -> "Jet":
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int) -> "Jet":
        if int(k) != k:
            raise ValueError("only integer powers are supported")
        k = int(k)
        if k < 0:
            return self.reciprocal() ** (-k)
        result = Jet.const(self.space, np.ones(self.shape), self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # calculus ----------------------------------------------------------------

    def diff(self, var: int) -> "Jet":
        """Partial derivative in variable ``var`` (order drops by one)."""
        if self.order == 0:
            raise OrderExceeded("cannot differentiate an order-0 jet")
        return Jet(self.space, self.space.diff(self.coeffs, var), self.order - 1)

    def gradient(self) -> "Jet":
        """Stack of all first partials, new trailing shape axis of length nvars."""
        return Jet.stack([self.diff(v) for v in range(self.space.nvars)], axis=-1)

    def directional(self, field: "Jet") -> "Jet":
        """Derivative along a vector field given as a jet of shape ``(nvars,)``."""
        total = None
        for v in range(self.space.nvars):
            comp = field[v]
            if not np.any(comp.coeffs):
                continue
            term = comp * self.diff(v)
            total = term if total is None else total + term
        if total is None:
            return Jet.zeros(self.space, self.shape, self.order - 1)
        return total

    def derivative(self, alpha) -> float | np.ndarray:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.space.nvars:
            raise ValueError("multi-index length must equal nvars")
        if sum(alpha) > self.order:
            raise OrderExceeded(f"|alpha|={sum(alpha)} exceeds jet order {self.order}")
        i = self.space.position[alpha]
        out = self.coeffs[..., i] * self.space.factorial[i]
        return float(out) if np.ndim(out) == 0 else out

    def coefficient(self, alpha):
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) > self.order:
            raise OrderExceeded(f"|alpha|={sum(alpha)} exceeds jet order {self.order}")
        out = self.coeffs[..., self.space.position[alpha]]
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.space.nvars}, order={self.order}, value={self.value!r})"


def _series(jet: Jet, derivs) -> Jet:
    """``sum_k derivs[k]/k! * (jet - c0)^k`` with ``derivs`` evaluated at c0."""
    c0 = jet.coeffs[..., 0]
    r = jet - Jet.const(jet.space, c0)
    result = Jet.const(jet.space, derivs[0], jet.order)
    term = Jet.const(jet.space, np.ones_like(c0), jet.order)
    for k in range(1, jet.order + 1):
        term = term * r
        result = result + term * (derivs[k] / math.factorial(k))
    return result


def compose_fn(name: str, jet: Jet) -> Jet:
    """Apply ``sin``, ``cos``, ``exp``, ``log`` or ``sqrt`` to a jet."""
    c0 = np.asarray(jet.coeffs[..., 0])
    K = jet.order
    if name == "exp":
        e = np.exp(c0)
        derivs = [e] * (K + 1)
    elif name == "sin":
        cyc = [np.sin(c0), np.cos(c0), -np.sin(c0), -np.cos(c0)]
        derivs = [cyc[k % 4] for k in range(K + 1)]
    elif name == "cos":
        cyc = [np.cos(c0), -np.sin(c0), -np.cos(c0), np.sin(c0)]
        derivs = [cyc[k % 4] for k in range(K + 1)]
    elif name == "log":
        if np.any(c0 <= 0):
            raise DomainError(f"log of non-positive value {c0}")
        derivs = [np.log(c0)] + [
            (-1.0) ** (k - 1) * math.factorial(k - 1) / c0**k for k in range(1, K + 1)
        ]
    elif name == "sqrt":
        if np.any(c0 <= 0):
            raise DomainError(f"sqrt of non-positive value {c0}")
        derivs = []
        coef = 1.0
        for k in range(K + 1):
            derivs.append(coef * c0 ** (0.5 - k))
            coef *= 0.5 - k
    else:
        raise ValueError(f"unknown function {name!r}")
    return _series(jet, derivs)


@dataclass(frozen=True)
class PointTM:
    """A point of the slashed tangent bundle: base coordinates and velocity."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same dimension")
        if not any(self.y):
            raise ValueError("y must be nonzero (point of the slashed tangent bundle)")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.x + self.y)

    def scaled(self, t: float) -> "PointTM":
        return PointTM(self.x, tuple(t * v for v in self.y))


def constant(value: float, nvars: int, order: int) -> Jet:
    return Jet.const(JetSpace.get(nvars, order), value)


def seed(var_index: int, u: PointTM | np.ndarray, order: int) -> Jet:
    """Jet of the coordinate function ``var_index`` expanded at ``u``."""
    coords = u.coords if isinstance(u, PointTM) else np.asarray(u, dtype=float)
    space = JetSpace.get(len(coords), order)
    c = np.zeros(space.size)
    c[0] = coords[var_index]
    if order >= 1:
        e = [0] * len(coords)
        e[var_index] = 1
        c[space.position[tuple(e)]] = 1.0
    return Jet(space, c)


def derivative(j: Jet, alpha) -> float:
    return j.derivative(alpha)
