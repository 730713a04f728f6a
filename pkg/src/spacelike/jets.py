"""Order-3 truncated Taylor arithmetic in two variables (u, v).

A :class:`Jet3` stores the Taylor coefficients ``c_ij`` of a function germ
for the ten monomials ``u**i * v**j`` with ``i + j <= 3``.  Coefficient
slots follow graded-lexicographic order:

=====  ======  =====  ======
index  (i, j)  index  (i, j)
=====  ======  =====  ======
0      (0, 0)  5      (0, 2)
1      (1, 0)  6      (3, 0)
2      (0, 1)  7      (2, 1)
3      (2, 0)  8      (1, 2)
4      (1, 1)  9      (0, 3)
=====  ======  =====  ======

Every coefficient array has shape ``(10, *batch)`` so one jet can carry the
germs at many chart points at once; all arithmetic broadcasts over the
trailing batch axes.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

ORDER = 3
MONOMIALS: tuple[tuple[int, int], ...] = (
    (0, 0),
    (1, 0), (0, 1),
    (2, 0), (1, 1), (0, 2),
    (3, 0), (2, 1), (1, 2), (0, 3),
)
NCOEFF = len(MONOMIALS)
INDEX = {m: k for k, m in enumerate(MONOMIALS)}
DIV_EPS = 1e-300


def _product_table() -> np.ndarray:
    table = np.zeros((NCOEFF, NCOEFF, NCOEFF))
    for a, (i1, j1) in enumerate(MONOMIALS):
        for b, (i2, j2) in enumerate(MONOMIALS):
            m = (i1 + i2, j1 + j2)
            if m[0] + m[1] <= ORDER:
                table[INDEX[m], a, b] = 1.0
    return table


_PRODUCT = _product_table()
_PRODUCT_FLAT = _PRODUCT.reshape(NCOEFF, NCOEFF * NCOEFF)
_FACT = np.array([math.factorial(i) * math.factorial(j) for i, j in MONOMIALS], dtype=float)


class JetDomainError(ValueError):
    """An operation left the domain of the function being lifted."""


def _as_array(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise JetDomainError(f"non-finite jet value: {value!r}")
    return arr


class Jet3:
    """Truncated bivariate Taylor expansion to total order 3.

    Instances are treated as immutable; every operation returns a new jet.
    """

    __slots__ = ("coeffs",)
    __array_priority__ = 100.0

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=float)
        if c.shape[:1] != (NCOEFF,):
            raise ValueError(f"Jet3 needs {NCOEFF} leading coefficients, got shape {c.shape}")
        self.coeffs = c

    # -- construction helpers -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def __repr__(self) -> str:
        if self.coeffs.ndim == 1:
            return f"Jet3({np.array2string(self.coeffs, precision=6)})"
        return f"Jet3(batch={self.shape})"

    def _coerce(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            return other
        return jet_const(other, _check=False)

    # -- ring operations --------------------------------------------------------
    def __neg__(self) -> "Jet3":
        return Jet3(-self.coeffs)

    def __pos__(self) -> "Jet3":
        return self

    def __add__(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            return Jet3(self.coeffs + other.coeffs)
        c = np.array(np.broadcast_to(self.coeffs, np.broadcast_shapes(self.coeffs.shape, (1,) + np.shape(other))))
        c[0] = c[0] + other
        return Jet3(c)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet3":
        return self + (-other)

    def __rsub__(self, other) -> "Jet3":
        return (-self) + other

    def __mul__(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            a, b = np.broadcast_arrays(self.coeffs, other.coeffs)
            batch = a.shape[1:]
            outer = a[:, None] * b[None, :]
            # symmetrised so that a * b and b * a agree bit for bit
            sym = (outer + np.swapaxes(outer, 0, 1)).reshape(NCOEFF * NCOEFF, -1)
            return Jet3((0.5 * (_PRODUCT_FLAT @ sym)).reshape((NCOEFF,) + batch))
        return Jet3(self.coeffs * np.asarray(other, dtype=float))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(np.abs(other) <= DIV_EPS):
            raise JetDomainError("division by zero")
        return Jet3(self.coeffs / other)

    def __rtruediv__(self, other) -> "Jet3":
        return reciprocal(self) * other

    def __pow__(self, n) -> "Jet3":
        if isinstance(n, (int, np.integer)):
            return pow_int(self, int(n))
        return exp(log(self) * n)


def jet_const(value, _check: bool = True) -> Jet3:
    """Jet of a constant function."""
    arr = _as_array(value) if _check else np.asarray(value, dtype=float)
    c = np.zeros((NCOEFF,) + arr.shape)
    c[0] = arr
    return Jet3(c)


def jet_var(axis: str, value) -> Jet3:
    """Jet of the coordinate function ``u`` or ``v`` based at ``value``."""
    if axis not in ("u", "v"):
        raise ValueError(f"axis must be 'u' or 'v', got {axis!r}")
    jet = jet_const(value)
    jet.coeffs[1 if axis == "u" else 2] = 1.0
    return jet


def jet_arith(a, b, op: str) -> Jet3:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown jet operation {op!r}")


def partial(a: Jet3, i: int, j: int) -> np.ndarray:
    """Partial derivative d^(i+j) / du^i dv^j at the base point."""
    if i < 0 or j < 0 or i + j > ORDER:
        raise ValueError(f"partial order ({i}, {j}) exceeds the truncation order")
    k = INDEX[(i, j)]
    return a.coeffs[k] * _FACT[k]


def diff(a: Jet3, axis: str) -> Jet3:
    """Derivative jet along ``axis``.

    The result is exact through order 2; its order-3 slots are zero.
    """
    c = np.zeros_like(a.coeffs)
    for k, (i, j) in enumerate(MONOMIALS):
        if axis == "u" and i > 0:
            c[INDEX[(i - 1, j)]] = i * a.coeffs[k]
        elif axis == "v" and j > 0:
            c[INDEX[(i, j - 1)]] = j * a.coeffs[k]
    return Jet3(c)


def lift(derivs: Sequence, a: Jet3) -> Jet3:
    """Compose a univariate function with a jet.

    ``derivs`` holds f, f', f'', f''' evaluated at the constant term of ``a``.
    """
    d = a - a.value
    d2 = d * d
    d3 = d2 * d
    f0, f1, f2, f3 = (np.asarray(x, dtype=float) for x in derivs)
    out = d * f1 + d2 * (f2 / 2.0) + d3 * (f3 / 6.0)
    out.coeffs[0] = f0
    if not np.all(np.isfinite(out.coeffs)):
        raise JetDomainError("lifted function is not finite at this point")
    return out


def jet_lift(f: Callable[[np.ndarray], Sequence], a: Jet3) -> Jet3:
    """Lift ``f`` (returning value and first three derivatives) onto ``a``."""
    return lift(f(a.value), a)


def compose(poly: Jet3, dx: Jet3, dy: Jet3) -> Jet3:
    """Evaluate the Taylor polynomial ``poly`` at the increments ``dx``, ``dy``.

    ``poly`` is a jet in some other pair of variables; ``dx`` and ``dy`` must
    have zero constant terms.
    """
    powers_x = [jet_const(np.ones(dx.shape), _check=False), dx]
    powers_y = [jet_const(np.ones(dy.shape), _check=False), dy]
    for _ in range(2):
        powers_x.append(powers_x[-1] * dx)
        powers_y.append(powers_y[-1] * dy)
    out = None
    for k, (i, j) in enumerate(MONOMIALS):
        term = powers_x[i] * powers_y[j] * poly.coeffs[k]
        out = term if out is None else out + term
    return out


# -- elementary functions -------------------------------------------------------

def _check_positive(x, name):
    if np.any(np.asarray(x) <= 0):
        raise JetDomainError(f"{name} needs a positive argument, got {x}")


def reciprocal(a: Jet3) -> Jet3:
    x = a.value
    if np.any(np.abs(x) <= DIV_EPS):
        raise JetDomainError("division by a jet with zero constant term")
    r = 1.0 / x
    return lift((r, -r**2, 2 * r**3, -6 * r**4), a)


def pow_int(a: Jet3, n: int) -> Jet3:
    if n < 0:
        return reciprocal(pow_int(a, -n))
    out = jet_const(np.ones(a.shape), _check=False)
    base = a
    while n:
        if n & 1:
            out = out * base
        n >>= 1
        if n:
            base = base * base
    return out


def _dispatch(name, jet_rule, float_rule):
    def fn(a):
        if isinstance(a, Jet3):
            return lift(jet_rule(a.value), a)
        return float_rule(a)
    fn.__name__ = name
    return fn


def _exp_rule(x):
    e = np.exp(x)
    return e, e, e, e


def _log_rule(x):
    _check_positive(x, "log")
    return np.log(x), 1 / x, -1 / x**2, 2 / x**3


def _sqrt_rule(x):
    _check_positive(x, "sqrt")
    s = np.sqrt(x)
    return s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)


def _tanh_rule(x):
    t = np.tanh(x)
    s = 1 - t * t
    return t, s, -2 * t * s, s * (6 * t * t - 2)


def _atan_rule(x):
    q = 1 / (1 + x * x)
    return np.arctan(x), q, -2 * x * q**2, (6 * x * x - 2) * q**3


def _abs_rule(x):
    if np.any(np.asarray(x) == 0):
        raise JetDomainError("abs is not differentiable at 0")
    s = np.sign(x)
    z = np.zeros_like(np.asarray(x, dtype=float))
    return np.abs(x), s, z, z


def _float_log(x):
    _check_positive(x, "log")
    return np.log(x)


def _float_sqrt(x):
    if np.any(np.asarray(x) < 0):
        raise JetDomainError(f"sqrt needs a non-negative argument, got {x}")
    return np.sqrt(x)


exp = _dispatch("exp", _exp_rule, np.exp)
log = _dispatch("log", _log_rule, _float_log)
sqrt = _dispatch("sqrt", _sqrt_rule, _float_sqrt)
sin = _dispatch("sin", lambda x: (np.sin(x), np.cos(x), -np.sin(x), -np.cos(x)), np.sin)
cos = _dispatch("cos", lambda x: (np.cos(x), -np.sin(x), -np.cos(x), np.sin(x)), np.cos)
sinh = _dispatch("sinh", lambda x: (np.sinh(x), np.cosh(x), np.sinh(x), np.cosh(x)), np.sinh)
cosh = _dispatch("cosh", lambda x: (np.cosh(x), np.sinh(x), np.cosh(x), np.sinh(x)), np.cosh)
tanh = _dispatch("tanh", _tanh_rule, np.tanh)
atan = _dispatch("atan", _atan_rule, np.arctan)
jabs = _dispatch("abs", _abs_rule, np.abs)

FUNCTIONS: dict[str, Callable] = {
    "sin": sin,
    "cos": cos,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "atan": atan,
    "abs": jabs,
}


def value_of(x) -> np.ndarray:
    """Constant term of a jet, or the number itself."""
    return x.value if isinstance(x, Jet3) else np.asarray(x, dtype=float)
