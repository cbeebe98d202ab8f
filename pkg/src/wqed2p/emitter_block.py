"""Two-photon operators of the bare emitter and its cavity-dressed reduction.

For a pair at total energy E, each operator is a diagonal part built from
the single-photon amplitudes of the two photons (k = E/2 + Delta,
p = E/2 - Delta) plus the background term B, which factorizes as
B0 * B1(Delta_in) * B2(Delta_out).

The reduced emitter folds in the multiple reflections of pairs whose two
photons sit on opposite sides of the emitter: both photons bounce off the
mirrors and return, which in this bookkeeping is the factor
r'^2 = sqrt(2) exp(2iEl) r^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import profiles as pf
from .core_model import PhysicalParams
from .shell_operator_algebra import ShellContext, ShellOperator, add, compose, identity, invert, rank_one
from .single_photon import emitter_amplitudes

SQRT2 = math.sqrt(2.0)


def _a(E: float, params: PhysicalParams) -> complex:
    return E - 2.0 * params.omega_int + 1j * params.gamma_int


def background_B(E, d_in, d_out, params: PhysicalParams):
    """Background fluorescence kernel B(E; Delta_in, Delta_out).

    Args:
        E: Total energy (angular units).
        d_in: Incoming half-difference.
        d_out: Outgoing half-difference.
        params: Physical parameters.
    """
    a = _a(E, params)
    g = params.gamma_int
    d_in = np.asarray(d_in)
    d_out = np.asarray(d_out)
    return (4j * g * g / np.pi) * a / ((4 * d_in ** 2 - a * a) * (4 * d_out ** 2 - a * a))


def factorize_B(E: float, params: PhysicalParams):
    """Separable form B = B0 * B1(Delta_in) * B2(Delta_out).

    Returns:
        Tuple (B0, B1, B2) with B1 and B2 as profiles.
    """
    a = _a(E, params)
    g = params.gamma_int
    b0 = (4j * g * g / np.pi) * a
    a2 = a * a
    b1 = pf.Func(lambda y: 1.0 / (4 * y * y - a2), "B1")
    b2 = pf.Func(lambda y: 1.0 / (4 * y * y - a2), "B2")
    return b0, b1, b2


@dataclass(frozen=True)
class PairAmplitudes:
    """Profiles of the two photons' single-photon amplitudes on the shell."""

    tk: pf.Profile
    tp: pf.Profile
    rk: pf.Profile
    rp: pf.Profile

    @classmethod
    def build(cls, E: float, params: PhysicalParams) -> "PairAmplitudes":
        half = 0.5 * E
        return cls(
            pf.Func(lambda y: emitter_amplitudes(half + y, params)[0], "tk"),
            pf.Func(lambda y: emitter_amplitudes(half - y, params)[0], "tp"),
            pf.Func(lambda y: emitter_amplitudes(half + y, params)[1], "rk"),
            pf.Func(lambda y: emitter_amplitudes(half - y, params)[1], "rp"),
        )

    @property
    def tt(self):
        return self.tk * self.tp

    @property
    def rr(self):
        return self.rk * self.rp

    @property
    def tr_sym(self):
        """t_k r_p + r_k t_p."""
        return self.tk * self.rp + self.rk * self.tp

    @property
    def tr_anti(self):
        """t_k r_p - r_k t_p (odd in Delta)."""
        return self.tk * self.rp - self.rk * self.tp


@dataclass(frozen=True)
class EmitterOperators:
    """The five two-photon operators of the bare emitter at one energy."""

    T22: ShellOperator
    R22: ShellOperator
    T12: ShellOperator
    T21: ShellOperator
    T11: ShellOperator
    amplitudes: PairAmplitudes


def build_emitter_operators(ctx: ShellContext, params: PhysicalParams) -> EmitterOperators:
    """Construct T22, R22, T12, T21 and T11 at the context energy."""
    E = ctx.energy
    amp = PairAmplitudes.build(E, params)
    b0, b1, b2 = factorize_B(E, params)
    t22 = rank_one(ctx, amp.tt, b0, b1, b2)
    r22 = rank_one(ctx, amp.rr, b0, b1, b2)
    t12 = rank_one(ctx, pf.product(amp.tr_sym, 0.5), b0, b1, b2)
    t21 = t12.scaled(SQRT2)
    t11 = rank_one(ctx, pf.product(amp.tt + amp.rr, 1.0 / SQRT2), SQRT2 * b0, b1, b2)
    return EmitterOperators(t22, r22, t12, t21, t11, amp)


def round_trip_factor(E: float, params: PhysicalParams) -> complex:
    """Pair phase and reflection for both photons bouncing once: r^2 exp(2iEl)."""
    return params.r ** 2 * np.exp(2j * E * params.half_length)


def r_prime_squared(E: float, params: PhysicalParams) -> complex:
    """r'^2 = sqrt(2) exp(2iEl) r^2."""
    return SQRT2 * round_trip_factor(E, params)


def odd_channel_profiles(ops: EmitterOperators, E: float, params: PhysicalParams):
    """Diagonal profiles of the exchange-odd split channel.

    Returns:
        Tuple (correction, feed) where ``correction`` is the diagonal term
        added to T and subtracted from R, and ``feed`` maps the together
        spectra difference onto the odd split amplitude.
    """
    rho2 = round_trip_factor(E, params)
    amp = ops.amplitudes
    d = amp.tr_anti
    loop = pf.linear_combination([(1.0, pf.ONE), (-rho2, amp.rr), (rho2, amp.tt)])
    inv = pf.reciprocal(loop)
    corr = pf.product(d, d, inv, -0.5 * rho2)
    feed = pf.product(d, inv, 0.5)
    return corr, feed


@dataclass(frozen=True)
class ReducedEmitter:
    """Cavity-dressed together-pair transmission and reflection operators.

    Attributes:
        T: Dressed transmission.
        R: Dressed reflection.
        loop_inverse: (1 - r'^2 T11)^-1.
        ops: Underlying bare operators.
        odd_channel: Whether the exchange-odd split channel is included.
    """

    T: ShellOperator
    R: ShellOperator
    loop_inverse: ShellOperator
    ops: EmitterOperators
    odd_channel: bool


def reduced_emitter(ctx: ShellContext, params: PhysicalParams, odd_channel: bool = False,
                    ops: EmitterOperators | None = None) -> ReducedEmitter:
    """Dress the emitter with the split-pair mirror loops.

    T = T22 + r'^2 T12 (1 - r'^2 T11)^-1 T21 and R = R22 + (same term).

    Args:
        ctx: Shell context.
        params: Physical parameters.
        odd_channel: Also include the split configurations that are odd
            under exchanging which photon sits on which side. They carry no
            background term, so they only add a diagonal correction.
        ops: Prebuilt bare operators (built if omitted).
    """
    E = ctx.energy
    ops = ops or build_emitter_operators(ctx, params)
    rp2 = r_prime_squared(E, params)
    one = identity(ctx)
    loop_inv = invert(add(one, ops.T11.scaled(-rp2)))
    if rp2 == 0:
        corr = None
    else:
        corr = compose(ops.T12, compose(loop_inv, ops.T21)).scaled(rp2)
    T = ops.T22 if corr is None else add(ops.T22, corr)
    R = ops.R22 if corr is None else add(ops.R22, corr)
    if odd_channel and rp2 != 0:
        c, _ = odd_channel_profiles(ops, E, params)
        T = ShellOperator(ctx, pf.linear_combination([(1.0, T.diag), (1.0, c)]), T.ins, T.outs, T.coef)
        R = ShellOperator(ctx, pf.linear_combination([(1.0, R.diag), (-1.0, c)]), R.ins, R.outs, R.coef)
    return ReducedEmitter(T, R, loop_inv, ops, odd_channel)
