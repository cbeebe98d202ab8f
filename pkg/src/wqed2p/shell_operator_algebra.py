"""Operators on two-photon spectra of fixed total energy.

A spectrum on the energy shell is a symmetrized delta at +-Delta0 plus a
smooth background b(Delta). An operator is a diagonal (multiplicative)
profile plus a low-rank kernel,

    (O f)(Delta) = d(Delta) f(Delta) + sum_ij C_ij v_i(Delta) <u_j, f>,
    <u, f> = 1/2 int u(y) f(y) dy,

where a delta part a*(delta(y - Delta0) + delta(y + Delta0)) contributes
a*u(Delta0) to the bracket. Keeping the kernel as separate input profiles
u_j, output profiles v_i and a coefficient matrix C makes composition grow
the basis additively, while each nonzero C_ij is one separable rank-one
kernel C_ij u_j(Delta_in) v_i(Delta_out).

Integrals run along the contour held by a :class:`ShellContext`: the real
line with small detours around points where intermediate profiles have
exactly-real singularities that cancel in physical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import profiles as pf
from .profiles import Profile, evaluate_many
from .quadrature import REAL_LINE, TAIL, Contour, QuadratureError, initial_partition, integrate, integrate_bilinear

#: Maximum number of input or output basis profiles per operator.
MAX_KERNELS = 64


class AlgebraError(RuntimeError):
    """Base class for failures of the operator algebra."""


class EnergyMismatchError(AlgebraError, ValueError):
    """Operands live on different energy shells."""


class SingularOperatorError(AlgebraError):
    """Inversion failed: vanishing diagonal or ill-conditioned kernel system."""


class KernelLimitError(AlgebraError):
    """Composition produced more kernel profiles than :data:`MAX_KERNELS`."""


@dataclass(frozen=True)
class ShellContext:
    """Integration settings shared by all operators at one total energy.

    Attributes:
        energy: Total energy E (angular units).
        contour: Integration path in the Delta plane.
        features: (position, width) pairs of known sharp structure; the
            initial quadrature partition is graded toward them.
        rtol: Relative tolerance of every cross integral.
        y_core: Half-width of the straight part before the mapped tails.
        max_len: Maximum initial subinterval length.
        max_intervals: Interval budget per integral.
        truncate: Drop the mapped tails, integrating over |Delta| <= y_core only.
    """

    energy: float
    contour: Contour = REAL_LINE
    features: tuple = ()
    rtol: float = 1e-10
    y_core: float = 1.0
    max_len: float = np.inf
    max_intervals: int = 60000
    truncate: bool = False
    _table: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        pos = [f[0] for f in self.features]
        pieces = self.contour.pieces(pos + [-p for p in pos], self.y_core)
        if self.truncate:
            pieces = [pc for pc in pieces if pc.kind != TAIL]
        feats = list(self.features) + [(-p, w) for p, w in self.features]
        object.__setattr__(self, "_table", initial_partition(pieces, feats, self.max_len))

    @property
    def table(self) -> np.ndarray:
        return self._table

    def with_rtol(self, rtol: float) -> "ShellContext":
        return ShellContext(self.energy, self.contour, self.features, rtol, self.y_core, self.max_len,
                            self.max_intervals, self.truncate)

    def value_at(self, profiles: Sequence[Profile], delta0: float) -> np.ndarray:
        """Evaluate profiles at a real point, robust against removable singularities.

        Under a contour detour the profiles may be sums of individually
        singular terms. There the value is taken as the mean over a circle
        enclosing the detour centers (exact for functions analytic in the
        disk), which is the continuation of the physical value.
        """
        delta0 = float(delta0)
        near = [(c, rad) for c, rad in self.contour.arcs() if abs(delta0 - c) < rad]
        if not near:
            return evaluate_many(profiles, np.array([delta0 + 0j]))[0]
        c, rad = near[0]
        radius = abs(delta0 - c) + rad
        n = 64
        z = delta0 + radius * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
        return evaluate_many(profiles, z).mean(axis=0)


def cross_matrix(us: Sequence[Profile], vs: Sequence[Profile], ctx: ShellContext,
                 weight: Profile | None = None) -> np.ndarray:
    """Matrix F_ij = 1/2 int u_i(y) v_j(y) w(y) dy along the context contour.

    Raises:
        QuadratureError: If the adaptive rule does not converge.
        SingularOperatorError: If the integrand is not finite on the contour.
    """
    m, n = len(us), len(vs)
    if m == 0 or n == 0:
        return np.zeros((m, n), dtype=complex)
    memo_holder = {}

    def fa(z):
        memo = {}
        memo_holder["memo"] = memo
        a = evaluate_many(us, z, memo)
        if weight is not None:
            a = a * weight.evaluate(z, memo)[:, None]
        return a

    def fb(z):
        b = evaluate_many(vs, z, memo_holder.pop("memo", {}))
        return b

    with np.errstate(all="ignore"):
        res = integrate_bilinear(fa, fb, ctx.table, rtol=ctx.rtol, max_intervals=ctx.max_intervals)
    if not np.all(np.isfinite(res.value)):
        raise SingularOperatorError("non-finite integrand on the contour (pole of 1/diag on the path?)")
    return 0.5 * res.value


def cross_integral(f: Profile, g: Profile, ctx: ShellContext) -> complex:
    """1/2 int f(y) g(y) dy along the context contour."""
    return complex(cross_matrix([f], [g], ctx)[0, 0])


def _dedupe(profs: list, axis_coef: np.ndarray, axis: int):
    """Merge identical profile objects, summing the matching coefficient slices."""
    index = {}
    keep = []
    groups = []
    for i, p in enumerate(profs):
        j = index.get(id(p))
        if j is None:
            index[id(p)] = len(keep)
            keep.append(p)
            groups.append([i])
        else:
            groups[j].append(i)
    if len(keep) == len(profs):
        return profs, axis_coef
    coef = np.moveaxis(axis_coef, axis, 0)
    merged = np.stack([coef[g].sum(axis=0) for g in groups])
    return keep, np.moveaxis(merged, 0, axis)


@dataclass(frozen=True)
class ShellOperator:
    """Diagonal profile plus low-rank kernel on one energy shell.

    Attributes:
        ctx: Shared energy and integration settings.
        diag: Multiplicative profile d(Delta).
        ins: Input profiles u_j (integrated against the spectrum).
        outs: Output profiles v_i.
        coef: Coefficient matrix of shape (len(outs), len(ins)).
    """

    ctx: ShellContext
    diag: Profile
    ins: tuple = ()
    outs: tuple = ()
    coef: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=complex).reshape(len(self.outs), len(self.ins))
        outs, coef = _dedupe(list(self.outs), coef, 0)
        ins, coef = _dedupe(list(self.ins), coef, 1)
        # Drop profiles that no longer carry any weight.
        rows = [i for i in range(len(outs)) if np.any(coef[i] != 0)]
        cols = [j for j in range(len(ins)) if np.any(coef[:, j] != 0)]
        coef = coef[np.ix_(rows, cols)]
        coef.setflags(write=False)
        object.__setattr__(self, "outs", tuple(outs[i] for i in rows))
        object.__setattr__(self, "ins", tuple(ins[j] for j in cols))
        object.__setattr__(self, "coef", coef)
        if max(len(self.ins), len(self.outs)) > MAX_KERNELS:
            raise KernelLimitError(f"operator needs {max(len(self.ins), len(self.outs))} kernel profiles "
                                   f"(limit {MAX_KERNELS})")

    @property
    def energy(self) -> float:
        return self.ctx.energy

    @property
    def kernels(self) -> list:
        """Rank-one kernels as (c, u, v) triples."""
        return [(self.coef[i, j], self.ins[j], self.outs[i])
                for i in range(len(self.outs)) for j in range(len(self.ins)) if self.coef[i, j] != 0]

    def kernel(self, d_out, d_in) -> np.ndarray:
        """Evaluate sum_ij C_ij v_i(d_out) u_j(d_in) on broadcast arrays."""
        d_out, d_in = np.broadcast_arrays(np.asarray(d_out, complex), np.asarray(d_in, complex))
        if not self.ins:
            return np.zeros(d_out.shape, dtype=complex)
        v = evaluate_many(self.outs, d_out)
        u = evaluate_many(self.ins, d_in)
        return np.einsum("ni,ij,nj->n", v, self.coef, u).reshape(d_out.shape)

    def scaled(self, c) -> "ShellOperator":
        return ShellOperator(self.ctx, pf.product(self.diag, c), self.ins, self.outs, self.coef * c)

    def __add__(self, other: "ShellOperator") -> "ShellOperator":
        return add(self, other)

    def __sub__(self, other: "ShellOperator") -> "ShellOperator":
        return add(self, other.scaled(-1.0))

    def __matmul__(self, other: "ShellOperator") -> "ShellOperator":
        return compose(self, other)

    def __mul__(self, c) -> "ShellOperator":
        return self.scaled(c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class OnShellSpectrum:
    """Two-photon spectrum at fixed total energy.

    The spectral density in Delta is
    delta_amp * (delta(Delta - Delta0) + delta(Delta + Delta0)) + background(Delta).

    Attributes:
        ctx: Shell context (carries E).
        delta_amp: Coherent amplitude.
        delta_pos: Delta0.
        background: Even profile, or None for a pure delta.
    """

    ctx: ShellContext
    delta_amp: complex
    delta_pos: float = 0.0
    background: Profile | None = None

    @property
    def energy(self) -> float:
        return self.ctx.energy

    def __add__(self, other: "OnShellSpectrum") -> "OnShellSpectrum":
        _check_same(self.ctx, other.ctx)
        if self.delta_pos != other.delta_pos:
            raise ValueError("spectra have different delta positions")
        if self.background is None:
            bg = other.background
        elif other.background is None:
            bg = self.background
        else:
            bg = self.background + other.background
        return OnShellSpectrum(self.ctx, self.delta_amp + other.delta_amp, self.delta_pos, bg)

    def scaled(self, c) -> "OnShellSpectrum":
        bg = None if self.background is None else pf.product(self.background, c)
        return OnShellSpectrum(self.ctx, self.delta_amp * c, self.delta_pos, bg)

    def multiplied(self, profile: Profile) -> "OnShellSpectrum":
        """Pointwise product with a profile (delta part uses its value at Delta0)."""
        val = self.ctx.value_at([profile], self.delta_pos)[0]
        bg = None if self.background is None else pf.product(self.background, profile)
        return OnShellSpectrum(self.ctx, self.delta_amp * val, self.delta_pos, bg)

    def background_values(self, delta) -> np.ndarray:
        delta = np.asarray(delta, dtype=complex)
        if self.background is None:
            return np.zeros(delta.shape, dtype=complex)
        return self.background(delta)


def delta_spectrum(ctx: ShellContext, delta0: float = 0.0, amp: complex = 1.0) -> OnShellSpectrum:
    """Monochromatic incident pair: unit symmetrized delta at Delta0."""
    return OnShellSpectrum(ctx, complex(amp), float(delta0), None)


def _check_same(a: ShellContext, b: ShellContext):
    if a is not b and a.energy != b.energy:
        raise EnergyMismatchError(f"energy mismatch: {a.energy} vs {b.energy}")


def identity(ctx: ShellContext) -> ShellOperator:
    return ShellOperator(ctx, pf.ONE)


def diagonal(ctx: ShellContext, d) -> ShellOperator:
    """Diagonal-only operator (numbers are lifted to constant profiles)."""
    return ShellOperator(ctx, pf.as_profile(d))


def rank_one(ctx: ShellContext, diag, c: complex, u: Profile, v: Profile) -> ShellOperator:
    """Operator diag + c * v(Delta_out) u(Delta_in)."""
    return ShellOperator(ctx, pf.as_profile(diag), (u,), (v,), np.array([[c]], dtype=complex))


def apply(op: ShellOperator, s: OnShellSpectrum) -> OnShellSpectrum:
    """Act with an operator on a spectrum.

    Raises:
        EnergyMismatchError: If the two live on different shells.
    """
    _check_same(op.ctx, s.ctx)
    ctx = op.ctx
    d0 = op.diag.const
    if d0 is None:
        d0 = ctx.value_at([op.diag], s.delta_pos)[0]
    amp = d0 * s.delta_amp
    parts = []
    if s.background is not None:
        parts.append((1.0, pf.product(op.diag, s.background)))
    if op.ins:
        bracket = np.zeros(len(op.ins), dtype=complex)
        if s.delta_amp != 0:
            bracket += s.delta_amp * ctx.value_at(op.ins, s.delta_pos)
        if s.background is not None:
            bracket += cross_matrix(op.ins, [s.background], ctx)[:, 0]
        w = op.coef @ bracket
        parts.extend((w[i], op.outs[i]) for i in range(len(op.outs)))
    bg = pf.linear_combination(parts) if parts else None
    return OnShellSpectrum(ctx, amp, s.delta_pos, bg)


def compose(a: ShellOperator, b: ShellOperator) -> ShellOperator:
    """Operator product a after b (b acts first).

    The diagonal multiplies, b's outputs pick up a's diagonal, a's inputs
    pick up b's diagonal, and every pair of kernels contributes a cross term
    weighted by 1/2 int u_a v_b.
    """
    _check_same(a.ctx, b.ctx)
    ctx = a.ctx
    da, db = a.diag, b.diag
    diag = pf.product(da, db)
    outs_b = tuple(v if da.const is not None else pf.product(da, v) for v in b.outs)
    ins_a = tuple(u if db.const is not None else pf.product(u, db) for u in a.ins)
    cb = b.coef * (da.const if da.const is not None else 1.0)
    ca = a.coef * (db.const if db.const is not None else 1.0)
    nb_out, nb_in = b.coef.shape
    na_out, na_in = a.coef.shape
    coef = np.zeros((nb_out + na_out, nb_in + na_in), dtype=complex)
    coef[:nb_out, :nb_in] = cb
    coef[nb_out:, nb_in:] = ca
    if a.ins and b.outs:
        f = cross_matrix(a.ins, b.outs, ctx)
        coef[nb_out:, :nb_in] = a.coef @ f @ b.coef
    return ShellOperator(ctx, diag, tuple(b.ins) + ins_a, outs_b + tuple(a.outs), coef)


def add(a: ShellOperator, b: ShellOperator) -> ShellOperator:
    """Operator sum."""
    _check_same(a.ctx, b.ctx)
    diag = pf.linear_combination([(1.0, a.diag), (1.0, b.diag)])
    coef = np.zeros((len(a.outs) + len(b.outs), len(a.ins) + len(b.ins)), dtype=complex)
    coef[:len(a.outs), :len(a.ins)] = a.coef
    coef[len(a.outs):, len(a.ins):] = b.coef
    return ShellOperator(a.ctx, diag, a.ins + b.ins, a.outs + b.outs, coef)


def invert(op: ShellOperator, cond_limit: float = 1e12) -> ShellOperator:
    """Inverse operator by the Woodbury identity.

    For O = d + V C <U, .>, the inverse is
    1/d - (V/d) C (I + F C)^-1 <U/d, .> with F_jk = 1/2 int u_j v_k / d.

    Raises:
        SingularOperatorError: If 1/d is not finite on the contour or the
            small linear system has condition number above ``cond_limit``.
    """
    ctx = op.ctx
    if op.diag.const is not None and op.diag.const == 0:
        raise SingularOperatorError("diagonal is identically zero")
    dinv = pf.reciprocal(op.diag)
    if dinv.const is not None and not np.isfinite(dinv.const):
        raise SingularOperatorError("diagonal is identically zero")
    if not op.ins:
        return ShellOperator(ctx, dinv)
    ins = tuple(pf.product(u, dinv) for u in op.ins)
    outs = tuple(pf.product(v, dinv) for v in op.outs)
    f = cross_matrix(op.ins, op.outs, ctx, weight=dinv)
    m = np.eye(len(op.ins)) + f @ op.coef
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularOperatorError(f"kernel system is singular (condition number {cond:.3e})")
    coef = -op.coef @ np.linalg.solve(m, np.eye(len(op.ins)))
    return ShellOperator(ctx, dinv, ins, outs, coef)


def grid_oracle(op: ShellOperator, n: int, delta_max: float):
    """Dense discretization of an operator on a uniform real grid.

    Returns:
        Tuple (grid, weights, matrix) with
        matrix[i, j] = d(x_i) delta_ij + K(x_i, x_j) * w_j / 2, trapezoid weights w.
    """
    x = np.linspace(-delta_max, delta_max, n)
    w = np.full(n, x[1] - x[0])
    w[0] = w[-1] = w[0] / 2
    if op.ins:
        v = evaluate_many(op.outs, x + 0j)
        u = evaluate_many(op.ins, x + 0j)
        mat = (v @ op.coef) @ (u * (w[:, None] / 2)).T
    else:
        mat = np.zeros((n, n), dtype=complex)
    mat.flat[::n + 1] += op.diag(x + 0j)
    return x, w, mat


def grid_apply(op: ShellOperator, s: OnShellSpectrum, n: int, delta_max: float) -> np.ndarray:
    """Background of ``apply(op, s)`` on the oracle grid, computed densely."""
    x, w, mat = grid_oracle(op, n, delta_max)
    b = s.background_values(x + 0j)
    out = mat @ b
    if op.ins and s.delta_amp != 0:
        u0 = evaluate_many(op.ins, np.array([s.delta_pos + 0j]))[0]
        out = out + evaluate_many(op.outs, x + 0j) @ (op.coef @ u0) * s.delta_amp
    return out


__all__ = [
    "AlgebraError", "EnergyMismatchError", "SingularOperatorError", "KernelLimitError", "QuadratureError",
    "MAX_KERNELS", "ShellContext", "ShellOperator", "OnShellSpectrum", "cross_matrix", "cross_integral",
    "apply", "compose", "add", "invert", "identity", "diagonal", "rank_one", "delta_spectrum",
    "grid_oracle", "grid_apply",
]
