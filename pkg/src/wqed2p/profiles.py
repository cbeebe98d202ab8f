"""Composable closed-form functions of the half-difference Delta.

Operator profiles are kept as small expression trees instead of sampled
arrays, so composing and inverting operators never discretizes anything;
only the cross integrals are approximated. Evaluation is memoized per call
(a shared subtree is computed once per node array), which keeps deep
composition chains linear in cost. Evaluation is pure and re-entrant.
"""

from __future__ import annotations

import numbers
from typing import Callable

import numpy as np


class Profile:
    """Base class of all expression nodes."""

    #: Constant value if the node is a constant, else None.
    const: complex | None = None

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = self.evaluate(z.ravel(), {})
        return np.broadcast_to(out, z.ravel().shape).reshape(z.shape)

    def evaluate(self, z: np.ndarray, memo: dict) -> np.ndarray:
        """Evaluate on a flat node array, reusing results recorded in ``memo``."""
        key = id(self)
        hit = memo.get(key)
        if hit is None:
            hit = self._eval(z, memo)
            memo[key] = hit
        return hit

    def _eval(self, z, memo):  # pragma: no cover - abstract
        raise NotImplementedError

    # Arithmetic builds simplified nodes.
    def __mul__(self, other):
        return product(self, other)

    __rmul__ = __mul__

    def __add__(self, other):
        return linear_combination([(1.0, self), (1.0, as_profile(other))])

    __radd__ = __add__

    def __sub__(self, other):
        return linear_combination([(1.0, self), (-1.0, as_profile(other))])

    def __rsub__(self, other):
        return linear_combination([(1.0, as_profile(other)), (-1.0, self)])

    def __neg__(self):
        return product(self, -1.0)

    def __truediv__(self, other):
        return product(self, reciprocal(as_profile(other)))

    def __rtruediv__(self, other):
        return product(as_profile(other), reciprocal(self))


class Const(Profile):
    """Constant function."""

    def __init__(self, value):
        self.const = complex(value)

    def _eval(self, z, memo):
        return np.full(z.shape, self.const)

    def __repr__(self):
        return f"Const({self.const})"


class Func(Profile):
    """Leaf wrapping a vectorized callable of Delta."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], label: str = "f"):
        self.fn = fn
        self.label = label

    def _eval(self, z, memo):
        return np.asarray(self.fn(z), dtype=complex)

    def __repr__(self):
        return self.label


class Product(Profile):
    """Scalar times a product of factors."""

    def __init__(self, factors: tuple, coeff: complex = 1.0):
        self.factors = factors
        self.coeff = complex(coeff)

    def _eval(self, z, memo):
        out = self.factors[0].evaluate(z, memo)
        for f in self.factors[1:]:
            out = out * f.evaluate(z, memo)
        return out * self.coeff if self.coeff != 1.0 else out

    def __repr__(self):
        inner = "*".join(repr(f) for f in self.factors)
        return inner if self.coeff == 1.0 else f"{self.coeff}*{inner}"


class Sum(Profile):
    """Linear combination sum_i c_i f_i plus a constant."""

    def __init__(self, terms: tuple, offset: complex = 0.0):
        self.terms = terms
        self.offset = complex(offset)

    def _eval(self, z, memo):
        out = np.full(z.shape, self.offset)
        for c, f in self.terms:
            out = out + c * f.evaluate(z, memo)
        return out

    def __repr__(self):
        return "(" + " + ".join(f"{c}*{f!r}" for c, f in self.terms) + (f" + {self.offset}" if self.offset else "") + ")"


class Reciprocal(Profile):
    """1 / f."""

    def __init__(self, inner: Profile):
        self.inner = inner

    def _eval(self, z, memo):
        return 1.0 / self.inner.evaluate(z, memo)

    def __repr__(self):
        return f"1/{self.inner!r}"


ONE = Const(1.0)
ZERO = Const(0.0)


def as_profile(x) -> Profile:
    """Lift numbers to :class:`Const`."""
    if isinstance(x, Profile):
        return x
    if isinstance(x, numbers.Number):
        return Const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a profile")


def constant(value) -> Const:
    return Const(value)


def product(*items) -> Profile:
    """Simplified product of profiles and numbers."""
    coeff = 1.0 + 0j
    factors = []
    for it in items:
        if isinstance(it, numbers.Number):
            coeff *= it
            continue
        if it.const is not None:
            coeff *= it.const
        elif isinstance(it, Product):
            coeff *= it.coeff
            factors.extend(it.factors)
        else:
            factors.append(it)
    if coeff == 0 or not factors:
        return Const(coeff if factors == [] else 0.0)
    if len(factors) == 1 and coeff == 1.0:
        return factors[0]
    return Product(tuple(factors), coeff)


def reciprocal(f: Profile) -> Profile:
    if f.const is not None:
        return Const(1.0 / f.const)
    if isinstance(f, Reciprocal):
        return f.inner
    return Reciprocal(f)


def linear_combination(pairs) -> Profile:
    """Simplified sum of (coefficient, profile) pairs."""
    offset = 0j
    terms = []
    for c, f in pairs:
        c = complex(c)
        if c == 0:
            continue
        if f.const is not None:
            offset += c * f.const
        elif isinstance(f, Sum):
            offset += c * f.offset
            terms.extend((c * cc, ff) for cc, ff in f.terms)
        else:
            terms.append((c, f))
    if not terms:
        return Const(offset)
    if len(terms) == 1 and offset == 0 and terms[0][0] == 1.0:
        return terms[0][1]
    return Sum(tuple(terms), offset)


def evaluate_many(profiles, z: np.ndarray, memo: dict | None = None) -> np.ndarray:
    """Evaluate several profiles on a shared node array, returned as (N, len)."""
    memo = {} if memo is None else memo
    z = np.asarray(z, dtype=complex).ravel()
    if not profiles:
        return np.zeros((z.size, 0), dtype=complex)
    cols = [np.broadcast_to(p.evaluate(z, memo), z.shape) for p in profiles]
    return np.stack(cols, axis=1)
