"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` is an array whose entries are polynomials in ``nvars`` chart
displacements, truncated at total degree ``order``.  Coefficients are stored
along a trailing axis in graded lexicographic order, so the coefficient of
``x^a`` is ``d^a f / a!``.  Arithmetic, elementary functions, matrix products
and small matrix inverses are exact up to truncation, which makes the class a
forward-mode differentiation substrate with no finite differencing.
"""

from __future__ import annotations

import functools
import itertools
import math
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Jet",
    "lift",
    "taylor_lift",
    "jet_compose",
    "monomials",
    "sin",
    "cos",
    "exp",
    "log",
    "sqrt",
    "power",
    "stack",
    "einsum",
    "inv",
    "solve_spd",
]

PUBLIC_ORDERS = (1, 2, 3)


class DomainError(ValueError):
    """Raised when a chart point lies outside an immersion's chart box."""


@functools.lru_cache(maxsize=None)
def monomials(nvars: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples of total degree <= order, graded lexicographic."""
    out = []
    for degree in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), degree):
            exp_ = [0] * nvars
            for i in combo:
                exp_[i] += 1
            out.append(tuple(exp_))
    return tuple(out)


class _Basis:
    """Index tables for one (nvars, order) pair."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.exps = monomials(nvars, order)
        self.size = len(self.exps)
        self.index = {e: k for k, e in enumerate(self.exps)}
        self.degree = np.array([sum(e) for e in self.exps], dtype=int)
        self.factorial = np.array(
            [math.prod(math.factorial(a) for a in e) for e in self.exps], dtype=float
        )
        pairs = []
        for ia, ea in enumerate(self.exps):
            for ib, eb in enumerate(self.exps):
                if sum(ea) + sum(eb) > order:
                    continue
                ec = tuple(a + b for a, b in zip(ea, eb))
                pairs.append((self.index[ec], ia, ib))
        pairs.sort()
        ig = np.array([p[0] for p in pairs], dtype=int)
        self.ia = np.array([p[1] for p in pairs], dtype=int)
        self.ib = np.array([p[2] for p in pairs], dtype=int)
        self.starts = np.searchsorted(ig, np.arange(self.size))

    def mul_coeffs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prods = a[..., self.ia] * b[..., self.ib]
        return np.add.reduceat(prods, self.starts, axis=-1)

    @functools.cached_property
    def diff_tables(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """For each variable i: (source index, factor) for the order-1 basis."""
        lower = basis(self.nvars, self.order - 1)
        tables = []
        for i in range(self.nvars):
            src = np.empty(lower.size, dtype=int)
            fac = np.empty(lower.size)
            for k, e in enumerate(lower.exps):
                up = list(e)
                up[i] += 1
                src[k] = self.index[tuple(up)]
                fac[k] = up[i]
            tables.append((src, fac))
        return tables


@functools.lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> _Basis:
    if nvars < 1:
        raise ValueError("a jet needs at least one variable")
    if order < 0:
        raise ValueError("order must be non-negative")
    return _Basis(nvars, order)


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


class Jet:
    """Array of truncated Taylor polynomials.

    ``coeffs`` has shape ``shape + (M,)`` with ``M`` the number of monomials of
    degree <= ``order`` in ``nvars`` variables.
    """

    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, coeffs, nvars: int, order: int):
        self.coeffs = _as_array(coeffs)
        self.nvars = int(nvars)
        self.order = int(order)
        self._basis = basis(self.nvars, self.order)
        if self.coeffs.shape[-1:] != (self._basis.size,):
            raise ValueError(
                f"trailing axis must have {self._basis.size} coefficients, "
                f"got shape {self.coeffs.shape}"
            )

    # ---- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        value = _as_array(value)
        coeffs = np.zeros(value.shape + (basis(nvars, order).size,))
        coeffs[..., 0] = value
        return cls(coeffs, nvars, order)

    @classmethod
    def variables(cls, x0, order: int) -> "Jet":
        """Seed jet ``x0 + dx`` for a point in R^n."""
        x0 = _as_array(x0).reshape(-1)
        n = x0.size
        b = basis(n, order)
        coeffs = np.zeros((n, b.size))
        coeffs[:, 0] = x0
        if order >= 1:
            coeffs[np.arange(n), 1 + np.arange(n)] = 1.0
        return cls(coeffs, n, order)

    @classmethod
    def from_derivatives(cls, derivs: Sequence[np.ndarray], nvars: int) -> "Jet":
        """Build a jet from dense derivative tensors ``[f, Df, D2f, ...]``."""
        order = len(derivs) - 1
        b = basis(nvars, order)
        value = _as_array(derivs[0])
        coeffs = np.zeros(value.shape + (b.size,))
        coeffs[..., 0] = value
        for k, e in enumerate(b.exps):
            deg = sum(e)
            if deg == 0:
                continue
            idx = tuple(i for i, a in enumerate(e) for _ in range(a))
            dense = _as_array(derivs[deg])
            coeffs[..., k] = dense[(Ellipsis,) + idx] / b.factorial[k]
        return cls(coeffs, nvars, order)

    # ---- basic properties ---------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    @property
    def dim_domain(self) -> int:
        return self.nvars

    @property
    def dim_ambient(self) -> int:
        if self.ndim != 1:
            raise ValueError("dim_ambient is defined for vector-valued jets")
        return self.shape[0]

    def __len__(self) -> int:
        return self.shape[0]

    def __iter__(self):
        for i in range(self.shape[0]):
            yield self[i]

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order})"

    def _new(self, coeffs) -> "Jet":
        return Jet(coeffs, self.nvars, self.order)

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            idx = idx + (slice(None),)
        return self._new(self.coeffs[idx])

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def transpose(self, *axes) -> "Jet":
        nd = self.ndim
        if not axes:
            axes = tuple(range(nd))[::-1]
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return self._new(np.transpose(self.coeffs, tuple(axes) + (nd,)))

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return self._new(self.coeffs.reshape(tuple(shape) + (self._basis.size,)))

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        return self._new(self.coeffs.sum(axis=axis))

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        size = basis(self.nvars, order).size
        return Jet(self.coeffs[..., :size], self.nvars, order)

    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets in different numbers of variables")
            if other.order != self.order:
                raise ValueError(
                    f"jets of different orders ({self.order} vs {other.order}); truncate first"
                )
            return other
        return None

    # ---- arithmetic ---------------------------------------------------
    def __neg__(self) -> "Jet":
        return self._new(-self.coeffs)

    def __add__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is not None:
            return self._new(self.coeffs + o.coeffs)
        other = _as_array(other)
        c = np.broadcast_to(self.coeffs, np.broadcast_shapes(self.shape, other.shape) + (self._basis.size,)).copy()
        c[..., 0] += other
        return self._new(c)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        o = self._coerce(other)
        if o is not None:
            return self._new(self._basis.mul_coeffs(self.coeffs, o.coeffs))
        return self._new(self.coeffs * _as_array(other)[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self._new(self.coeffs / _as_array(other)[..., None])

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, r) -> "Jet":
        if isinstance(r, (int, np.integer)) and r >= 0:
            out = Jet.constant(np.ones(self.shape), self.nvars, self.order)
            for _ in range(int(r)):
                out = out * self
            return out
        return power(self, r)

    def __matmul__(self, other) -> "Jet":
        return _matmul(self, other)

    def __rmatmul__(self, other) -> "Jet":
        return _matmul(other, self)

    def reciprocal(self) -> "Jet":
        return power(self, -1.0)

    # ---- calculus -----------------------------------------------------
    def diff(self, i: int) -> "Jet":
        """Partial derivative along chart variable ``i`` (order drops by one)."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self._basis.diff_tables[i]
        return Jet(self.coeffs[..., src] * fac, self.nvars, self.order - 1)

    def gradient(self) -> "Jet":
        """Stack of partials along a new trailing axis of the value shape."""
        parts = [self.diff(i) for i in range(self.nvars)]
        return Jet(np.stack([p.coeffs for p in parts], axis=-2), self.nvars, self.order - 1)

    def derivative(self, k: int) -> np.ndarray:
        """Dense tensor of k-th partial derivatives at the base point."""
        if k > self.order:
            raise ValueError(f"jet of order {self.order} has no derivative of order {k}")
        n = self.nvars
        b = self._basis
        out = np.empty(self.shape + (n,) * k)
        for idx in itertools.product(range(n), repeat=k):
            e = [0] * n
            for i in idx:
                e[i] += 1
            m = b.index[tuple(e)]
            out[(Ellipsis,) + idx] = self.coeffs[..., m] * b.factorial[m]
        return out

    def derivatives(self) -> list[np.ndarray]:
        return [self.derivative(k) for k in range(self.order + 1)]

    def __call__(self, dx) -> np.ndarray:
        """Evaluate the truncated polynomial at displacement ``dx``."""
        dx = _as_array(dx).reshape(-1)
        mons = np.array([math.prod(dx[i] ** a for i, a in enumerate(e)) for e in self._basis.exps])
        return self.coeffs @ mons

    def expand_vars(self, nvars: int, var_map: Sequence[int] | None = None) -> "Jet":
        """Re-express in ``nvars`` variables, old variable i becoming ``var_map[i]``."""
        if var_map is None:
            var_map = list(range(self.nvars))
        nb = basis(nvars, self.order)
        coeffs = np.zeros(self.shape + (nb.size,))
        for k, e in enumerate(self._basis.exps):
            new = [0] * nvars
            for i, a in enumerate(e):
                new[var_map[i]] += a
            coeffs[..., nb.index[tuple(new)]] = self.coeffs[..., k]
        return Jet(coeffs, nvars, self.order)

    def symmetric_blocks(self) -> list[np.ndarray]:
        """Dense coefficient tensors per degree (derivatives over factorials)."""
        return [self.derivative(k) / math.factorial(k) for k in range(self.order + 1)]


# ---- univariate composition ---------------------------------------------

def _compose_univariate(x: Jet, taylor: np.ndarray) -> Jet:
    """Apply f with ``taylor[j] = f^(j)(x0) / j!`` (leading axis j)."""
    h = x - x.value
    out = Jet.constant(taylor[0], x.nvars, x.order)
    hp = None
    for j in range(1, x.order + 1):
        hp = h if hp is None else hp * h
        out = out + hp * taylor[j]
    return out


def _taylor_table(kind: str, a0: np.ndarray, order: int, r: float = 0.0) -> np.ndarray:
    rows = []
    for j in range(order + 1):
        fj = 1.0 / math.factorial(j)
        if kind == "sin":
            d = [np.sin, np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t)][j % 4](a0)
        elif kind == "cos":
            d = [np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin][j % 4](a0)
        elif kind == "exp":
            d = np.exp(a0)
        elif kind == "log":
            d = np.log(a0) if j == 0 else (-1.0) ** (j - 1) * math.factorial(j - 1) / a0**j
        elif kind == "power":
            d = math.prod(r - i for i in range(j)) * a0 ** (r - j)
        else:  # pragma: no cover
            raise ValueError(kind)
        rows.append(fj * d)
    return np.array(rows)


def _unary(kind: str, npfunc):
    def f(x, *args):
        if isinstance(x, Jet):
            return _compose_univariate(x, _taylor_table(kind, x.value, x.order, *args))
        if args:
            return npfunc(x, *args)
        return npfunc(x)

    f.__name__ = kind
    return f


sin = _unary("sin", np.sin)
cos = _unary("cos", np.cos)
exp = _unary("exp", np.exp)
log = _unary("log", np.log)


def power(x, r: float):
    if isinstance(x, Jet):
        return _compose_univariate(x, _taylor_table("power", x.value, x.order, float(r)))
    return np.power(x, r)


def sqrt(x):
    return power(x, 0.5)


# ---- array helpers ------------------------------------------------------

def _template(items: Iterable) -> Jet | None:
    for it in items:
        if isinstance(it, Jet):
            return it
    return None


def stack(items: Sequence, axis: int = 0):
    """``np.stack`` that promotes constants when any item is a jet."""
    items = list(items)
    t = _template(items)
    if t is None:
        return np.stack([_as_array(i) for i in items], axis=axis)
    coeffs = [
        (i if isinstance(i, Jet) else Jet.constant(i, t.nvars, t.order)).coeffs for i in items
    ]
    if axis < 0:
        axis = axis + coeffs[0].ndim
    return Jet(np.stack(coeffs, axis=axis), t.nvars, t.order)


def concatenate(items: Sequence, axis: int = 0):
    items = list(items)
    t = _template(items)
    if t is None:
        return np.concatenate([_as_array(i) for i in items], axis=axis)
    coeffs = [
        (i if isinstance(i, Jet) else Jet.constant(i, t.nvars, t.order)).coeffs for i in items
    ]
    if axis < 0:
        axis = axis + coeffs[0].ndim - 1
    return Jet(np.concatenate(coeffs, axis=axis), t.nvars, t.order)


def _free_letter(spec: str) -> str:
    for c in "ZYXWVUTSRQ":
        if c not in spec:
            return c
    raise ValueError("no free einsum letter")  # pragma: no cover


def einsum(spec: str, a, b):
    """Two-operand einsum where either operand may be a jet."""
    lhs, out = spec.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    z = _free_letter(spec)
    if isinstance(a, Jet) and isinstance(b, Jet):
        a._coerce(b)
        bas = a._basis
        prods = np.einsum(f"{sa}{z},{sb}{z}->{out}{z}", a.coeffs[..., bas.ia], b.coeffs[..., bas.ib])
        return a._new(np.add.reduceat(prods, bas.starts, axis=-1))
    if isinstance(a, Jet):
        return a._new(np.einsum(f"{sa}{z},{sb}->{out}{z}", a.coeffs, _as_array(b)))
    if isinstance(b, Jet):
        return b._new(np.einsum(f"{sa},{sb}{z}->{out}{z}", _as_array(a), b.coeffs))
    return np.einsum(spec, a, b)


def _matmul(a, b):
    a_nd = a.ndim if isinstance(a, Jet) else np.ndim(a)
    b_nd = b.ndim if isinstance(b, Jet) else np.ndim(b)
    la = "ij" if a_nd == 2 else "j"
    lb = "jk" if b_nd == 2 else "j"
    lo = ("i" if a_nd == 2 else "") + ("k" if b_nd == 2 else "")
    if a_nd > 2 or b_nd > 2:
        la = "...ij" if a_nd >= 2 else "j"
        lb = "...jk" if b_nd >= 2 else "j"
        lo = "..." + ("i" if a_nd >= 2 else "") + ("k" if b_nd >= 2 else "")
    return einsum(f"{la},{lb}->{lo}", a, b)


def inv(a: Jet) -> Jet:
    """Inverse of a square jet matrix by Neumann series about the base value."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    a0inv = np.linalg.inv(a.value)
    nil = a - a.value
    step = -(a0inv @ nil)
    out = Jet.constant(a0inv, a.nvars, a.order)
    term = out
    for _ in range(a.order):
        term = step @ term
        out = out + term
    return out


def solve_spd(a: Jet, b: Jet) -> Jet:
    return inv(a) @ b


# ---- lifting immersions -------------------------------------------------

def taylor_lift(immersion, x, order: int) -> Jet:
    """Jet of ``immersion`` at chart point ``x`` to any order >= 1."""
    x = _as_array(x).reshape(-1)
    if x.size != immersion.n:
        raise DomainError(f"expected a point in R^{immersion.n}, got {x.size} coordinates")
    if not np.all(np.isfinite(x)):
        raise DomainError("chart point has non-finite coordinates")
    if not immersion.contains(x):
        raise DomainError(f"point {x.tolist()} lies outside the chart domain of {immersion.name}")
    if order < 1:
        raise ValueError("order must be at least 1")
    seed = Jet.variables(x, order)
    out = immersion.func(seed)
    if not isinstance(out, Jet):
        out = Jet.constant(out, x.size, order)
    return out


def lift(immersion, x, order: int = 3) -> Jet:
    """Taylor jet of an immersion at ``x``, order 1, 2 or 3.

    Coefficients equal the analytic partial derivatives divided by the
    multi-index factorials.
    """
    if order not in PUBLIC_ORDERS:
        raise ValueError(f"order must be one of {PUBLIC_ORDERS}, got {order}")
    return taylor_lift(immersion, x, order)


def jet_compose(outer: Jet, inner: Jet) -> Jet:
    """Jet of ``outer o inner`` by truncated substitution.

    ``outer`` is expanded about the base value of ``inner``; the result has
    the smaller of the two orders.
    """
    if inner.ndim != 1 or inner.shape[0] != outer.nvars:
        raise ValueError(
            f"dimension mismatch: inner has shape {inner.shape}, outer expects {outer.nvars} variables"
        )
    order = min(outer.order, inner.order)
    inner = inner.truncate(order)
    outer = outer.truncate(order)
    delta = inner - inner.value
    exps = basis(outer.nvars, order).exps
    powers: list[Jet] = []
    lookup: dict[tuple[int, ...], Jet] = {}
    one = Jet.constant(1.0, inner.nvars, order)
    for e in exps:
        if sum(e) == 0:
            p = one
        else:
            i = next(k for k, a in enumerate(e) if a)
            prev = list(e)
            prev[i] -= 1
            p = lookup[tuple(prev)] * delta[i]
        lookup[e] = p
        powers.append(p)
    table = np.stack([p.coeffs for p in powers])  # (M_outer, M_inner)
    return Jet(np.tensordot(outer.coeffs, table, axes=1), inner.nvars, order)
