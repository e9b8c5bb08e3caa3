"""Truncated Taylor jets for exact spatial derivatives up to order 4.

A :class:`Jet` stores the Taylor coefficients of a scalar field around a
point (or a batch of points) in one or two variables.  The coefficient with
multi-index ``(i, j)`` multiplies ``dx**i * dy**j``, so the partial
derivative is ``coeff(i, j) * i! * j!``.

Coefficient arrays may be numpy or jax arrays.  All operations pick the
array namespace from their operands, which lets the same jets run eagerly in
numpy or inside ``jax.jit`` / ``jax.grad`` (used for parameter gradients).
"""
from __future__ import annotations

import math
from functools import lru_cache

import jax
import jax.numpy as jnp
import numpy as np

from .errors import DomainError, SingularityError

jax.config.update("jax_enable_x64", True)

MAX_ORDER = 4
UNIVARIATE_TAGS = ("tanh", "exp", "log", "sin", "cos", "pow_const")


def _ns(*arrays):
    for a in arrays:
        if isinstance(a, jax.Array):
            return jnp
    return np


def _is_concrete(a):
    return not isinstance(a, jax.core.Tracer)


@lru_cache(maxsize=None)
def multi_indices(order, nvars):
    """Graded ordering of the multi-indices with total degree <= order."""
    if nvars == 1:
        return tuple((k,) for k in range(order + 1))
    out = []
    for d in range(order + 1):
        for i in range(d, -1, -1):
            out.append((i, d - i))
    return tuple(out)


@lru_cache(maxsize=None)
def _index_of(order, nvars):
    return {m: k for k, m in enumerate(multi_indices(order, nvars))}


@lru_cache(maxsize=None)
def _product_table(order, nvars):
    """For every output slot, the (left, right) slot pairs that feed it."""
    idx = _index_of(order, nvars)
    mis = multi_indices(order, nvars)
    table = []
    for m in mis:
        pairs = []
        for a, ma in enumerate(mis):
            rest = tuple(x - y for x, y in zip(m, ma))
            if min(rest) >= 0:
                pairs.append((a, idx[rest]))
        table.append(tuple(pairs))
    return tuple(table)


def n_coeffs(order, nvars):
    if nvars == 1:
        return order + 1
    return (order + 1) * (order + 2) // 2


class Jet:
    """Truncated Taylor expansion; ``coeffs`` has shape ``(n_coeffs, *batch)``.

    Jets are treated as immutable values.
    """

    __slots__ = ("coeffs", "order", "nvars")
    __array_priority__ = 1000
    __array_ufunc__ = None

    def __init__(self, coeffs, order, nvars):
        if nvars not in (1, 2):
            raise ValueError(f"nvars must be 1 or 2, got {nvars}")
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in [0, {MAX_ORDER}], got {order}")
        if coeffs.shape[0] != n_coeffs(order, nvars):
            raise ValueError(
                f"expected {n_coeffs(order, nvars)} coefficients for order={order}, "
                f"nvars={nvars}; got {coeffs.shape[0]}"
            )
        self.coeffs = coeffs
        self.order = order
        self.nvars = nvars

    @classmethod
    def constant(cls, value, order, nvars):
        xp = _ns(value)
        value = xp.asarray(value, dtype=xp.float64)
        coeffs = xp.zeros((n_coeffs(order, nvars),) + value.shape, dtype=xp.float64)
        if xp is np:
            coeffs[0] = value
        else:
            coeffs = coeffs.at[0].set(value)
        return cls(coeffs, order, nvars)

    @property
    def value(self):
        return self.coeffs[0]

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    def coeff(self, *multi):
        multi = _normalize_multi(multi, self.nvars)
        try:
            k = _index_of(self.order, self.nvars)[multi]
        except KeyError:
            raise ValueError(f"multi-index {multi} exceeds jet order {self.order}") from None
        return self.coeffs[k]

    def partial(self, *multi):
        return extract_partial(self, multi)

    def _wrap(self, other):
        if isinstance(other, Jet):
            _check_compatible(self, other)
            return other
        return Jet.constant(other, self.order, self.nvars)

    def __add__(self, other):
        if isinstance(other, Jet):
            return jet_add(self, other)
        return _shift(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return jet_sub(self, other)
        return _shift(self, -other)

    def __rsub__(self, other):
        return _shift(-self, other)

    def __neg__(self):
        return Jet(-self.coeffs, self.order, self.nvars)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return jet_scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_div(self, other)
        return jet_scale(self, 1.0 / other)

    def __rtruediv__(self, other):
        return jet_div(self._wrap(other), self)

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Jet.constant(_ns(self.coeffs).ones_like(self.value), self.order, self.nvars)
            for _ in range(p):
                out = out * self
            return out
        return jet_univariate("pow_const", self, p)

    def __repr__(self):
        return f"Jet(order={self.order}, nvars={self.nvars}, batch={self.batch_shape})"


def _normalize_multi(multi, nvars):
    if len(multi) == 1 and isinstance(multi[0], (tuple, list)):
        multi = tuple(multi[0])
    multi = tuple(int(m) for m in multi)
    if nvars == 2 and len(multi) == 1:
        multi = (multi[0], 0)
    if len(multi) != nvars:
        raise ValueError(f"multi-index {multi} does not match nvars={nvars}")
    if min(multi) < 0:
        raise ValueError(f"negative multi-index {multi}")
    return multi


def _check_compatible(a, b):
    if a.order != b.order or a.nvars != b.nvars:
        raise ValueError(
            f"incompatible jets: (order={a.order}, nvars={a.nvars}) vs "
            f"(order={b.order}, nvars={b.nvars})"
        )


def _shift(a, c):
    xp = _ns(a.coeffs, c)
    head = a.coeffs[0] + c
    coeffs = xp.concatenate([head[None], xp.broadcast_to(a.coeffs[1:], (a.coeffs.shape[0] - 1,) + head.shape)])
    return Jet(coeffs, a.order, a.nvars)


def jet_variable(value, var_index, order=MAX_ORDER, nvars=1):
    """Jet of the coordinate function ``x_{var_index}`` expanded at ``value``."""
    if not 0 <= var_index < nvars:
        raise ValueError(f"var_index {var_index} out of range for nvars={nvars}")
    if order < 1:
        raise ValueError("a coordinate jet needs order >= 1")
    xp = _ns(value)
    value = xp.asarray(value, dtype=xp.float64)
    unit = (1, 0) if var_index == 0 else (0, 1)
    if nvars == 1:
        unit = (1,)
    k = _index_of(order, nvars)[unit]
    rows = [value] + [xp.zeros_like(value)] * (n_coeffs(order, nvars) - 1)
    rows[k] = xp.ones_like(value)
    return Jet(xp.stack(rows), order, nvars)


def jet_add(a, b):
    _check_compatible(a, b)
    return Jet(a.coeffs + b.coeffs, a.order, a.nvars)


def jet_sub(a, b):
    _check_compatible(a, b)
    return Jet(a.coeffs - b.coeffs, a.order, a.nvars)


def jet_scale(a, s):
    """Multiply a jet by a scalar or a per-point array (constant in space)."""
    return Jet(a.coeffs * s, a.order, a.nvars)


def jet_mul(a, b):
    """Truncated Cauchy product of two jets."""
    _check_compatible(a, b)
    xp = _ns(a.coeffs, b.coeffs)
    # unstack once: per-slot indexing under jax.grad scatters into full-size zeros
    A, B = _rows(a.coeffs), _rows(b.coeffs)
    rows = []
    for pairs in _product_table(a.order, a.nvars):
        i, j = pairs[0]
        acc = A[i] * B[j]
        for i, j in pairs[1:]:
            acc = acc + A[i] * B[j]
        rows.append(acc)
    return Jet(xp.stack(rows), a.order, a.nvars)


def _rows(c):
    if _ns(c) is np:
        return list(c)
    return jnp.unstack(c, axis=0)


def jet_div(a, b):
    _check_compatible(a, b)
    b0 = b.coeffs[0]
    if _is_concrete(b0) and np.any(np.asarray(b0) == 0):
        raise SingularityError("division by a jet with zero constant term")
    return jet_mul(a, jet_univariate("pow_const", b, -1.0))


def _derivatives(tag, x0, order, p=None):
    """[f(x0), f'(x0), ..., f^(order)(x0)] for an elementary function."""
    xp = _ns(x0)
    if tag == "tanh":
        # d/dx P(t) = P'(t) (1 - t^2): carry polynomial coefficients in t
        t = xp.tanh(x0)
        poly = np.array([0.0, 1.0])  # P_0(t) = t
        out = []
        for _ in range(order + 1):
            out.append(np.polynomial.polynomial.polyval(t, poly) if xp is np else _polyval(poly, t))
            poly = np.polynomial.polynomial.polymul(
                np.polynomial.polynomial.polyder(poly), [1.0, 0.0, -1.0]
            )
        return out
    if tag == "exp":
        e = xp.exp(x0)
        return [e] * (order + 1)
    if tag == "sin":
        s, c = xp.sin(x0), xp.cos(x0)
        return [(s, c, -s, -c)[k % 4] for k in range(order + 1)]
    if tag == "cos":
        s, c = xp.sin(x0), xp.cos(x0)
        return [(c, -s, -c, s)[k % 4] for k in range(order + 1)]
    if tag == "log":
        if _is_concrete(x0) and np.any(np.asarray(x0) <= 0):
            raise DomainError("log of a non-positive value")
        out = [xp.log(x0)]
        inv = 1.0 / x0
        pw = inv
        for k in range(1, order + 1):
            out.append((-1) ** (k - 1) * math.factorial(k - 1) * pw)
            pw = pw * inv
        return out
    if tag == "pow_const":
        if p is None:
            raise ValueError("pow_const needs an exponent")
        p = float(p)
        if _is_concrete(x0):
            x0_np = np.asarray(x0)
            if not p.is_integer() and np.any(x0_np <= 0):
                raise DomainError("non-integer power of a non-positive value")
            if p < 0 and np.any(x0_np == 0):
                raise SingularityError("negative power of zero")
        out = []
        fall = 1.0
        for k in range(order + 1):
            if fall == 0.0:
                out.append(xp.zeros_like(x0))
            else:
                out.append(fall * x0 ** (p - k))
            fall *= p - k
        return out
    raise ValueError(f"unknown elementary function {tag!r}")


def _polyval(coeffs, t):
    acc = 0.0 * t + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * t + c
    return acc


@lru_cache(maxsize=None)
def _degree_table(order, nvars):
    """Per slot: total degree and the (beta, alpha - beta) slot pairs with beta != 0."""
    mis = multi_indices(order, nvars)
    prods = _product_table(order, nvars)
    out = []
    for k, m in enumerate(mis):
        pairs = tuple((i, j, sum(mis[i])) for i, j in prods[k] if sum(mis[i]) > 0)
        out.append((sum(m), pairs))
    return tuple(out)


def _tanh_rows(z, order, nvars, xp):
    """tanh by the Euler-operator recurrence ``E(y) = (1 - y^2) E(z)``.

    ``E = sum_i x_i d/dx_i`` multiplies the coefficient of degree d by d, so
    ``d * y_a = sum_{b != 0} |b| z_b s_{a-b}`` with ``s = 1 - y^2`` known
    from lower degrees.
    """
    table = _degree_table(order, nvars)
    prods = _product_table(order, nvars)
    n = len(table)
    y = [None] * n
    s = [None] * n
    y[0] = xp.tanh(z[0])
    s[0] = 1.0 - y[0] * y[0]
    k = 1
    while k < n:
        deg = table[k][0]
        start = k
        while k < n and table[k][0] == deg:
            acc = None
            for i, j, dz in table[k][1]:
                term = z[i] * s[j] if dz == 1 else (dz * z[i]) * s[j]
                acc = term if acc is None else acc + term
            y[k] = acc if deg == 1 else acc * (1.0 / deg)
            k += 1
        for q in range(start, k):
            acc = None
            for i, j in prods[q]:
                if i > j:
                    continue
                term = y[i] * y[j] if i == j else 2.0 * (y[i] * y[j])
                acc = term if acc is None else acc + term
            s[q] = -acc
    return y


def jet_univariate(tag, a, p=None):
    """Compose an elementary function with a jet.

    Uses ``f(a0 + h) = sum_k f^(k)(a0) / k! h^k`` where ``h`` is the
    nilpotent part of ``a``; the sum is exact to the jet order.
    """
    if tag not in UNIVARIATE_TAGS:
        raise ValueError(f"unknown elementary function {tag!r}")
    xp = _ns(a.coeffs)
    if tag == "tanh":
        return Jet(xp.stack(_tanh_rows(_rows(a.coeffs), a.order, a.nvars, xp)), a.order, a.nvars)
    x0 = a.coeffs[0]
    d = _derivatives(tag, x0, a.order, p)
    if a.order == 0:
        return Jet(d[0][None], 0, a.nvars)
    h = Jet(xp.concatenate([xp.zeros_like(x0)[None], a.coeffs[1:]]), a.order, a.nvars)
    # Horner in h with per-point scalar coefficients d_k / k!
    acc = Jet.constant(d[a.order] / math.factorial(a.order), a.order, a.nvars)
    for k in range(a.order - 1, -1, -1):
        acc = _shift(jet_mul(acc, h), d[k] / math.factorial(k))
    return acc


def tanh(a):
    return jet_univariate("tanh", a)


def exp(a):
    return jet_univariate("exp", a)


def log(a):
    return jet_univariate("log", a)


def sin(a):
    return jet_univariate("sin", a)


def cos(a):
    return jet_univariate("cos", a)


def power(a, p):
    return jet_univariate("pow_const", a, p)


def extract_partial(a, multi_index):
    """True partial derivative ``d^{|m|} u / dx^i dy^j`` from a jet."""
    if not isinstance(multi_index, (tuple, list)):
        multi_index = (multi_index,)
    multi = _normalize_multi(tuple(multi_index), a.nvars)
    if sum(multi) > a.order:
        raise ValueError(f"multi-index {multi} exceeds jet order {a.order}")
    scale = 1
    for m in multi:
        scale *= math.factorial(m)
    return a.coeff(*multi) * scale


def jet_derivative(a, var=0):
    """Jet of ``d a / d x_var``; the result has order ``a.order - 1``."""
    if a.order < 1:
        raise ValueError("cannot differentiate an order-0 jet")
    if not 0 <= var < a.nvars:
        raise ValueError(f"var {var} out of range for nvars={a.nvars}")
    xp = _ns(a.coeffs)
    idx = _index_of(a.order, a.nvars)
    rows = []
    for m in multi_indices(a.order - 1, a.nvars):
        up = list(m)
        up[var] += 1
        rows.append(a.coeffs[idx[tuple(up)]] * up[var])
    return Jet(xp.stack(rows), a.order - 1, a.nvars)


def truncate(a, order):
    """Drop all coefficients above ``order``."""
    if order > a.order:
        raise ValueError(f"cannot raise jet order from {a.order} to {order}")
    if order == a.order:
        return a
    return Jet(a.coeffs[: n_coeffs(order, a.nvars)], order, a.nvars)
