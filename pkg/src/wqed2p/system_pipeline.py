"""Whole-system two-photon transfer matrix and the wave-packet procedure.

Incidence is from the right. The pair leaving through the left mirror while
still together is packet 1, obtained by inverting the (2,2) entry of the
system transfer block; packet 4 is the pair reflected together. Packets
5 and 6 are the together pairs travelling toward the emitter inside the
cavity, and packet 7 the split pair leaving the emitter toward both mirrors.
Two further routes end with both photons transmitted:

* packet 2: at the left mirror one photon of the together pair leaves and
  the other is reflected back, then finds its own way out to the left;
* packet 3: from the split pair, the photon heading left leaves and the one
  heading right is reflected, then finds its own way out to the left.

"Finds its own way out" is single-photon transport through the whole
system, so these two corrections complete the sum over histories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import profiles as pf
from .core_model import PhysicalParams
from .emitter_block import ReducedEmitter, odd_channel_profiles, reduced_emitter, round_trip_factor
from .quadrature import Contour
from .resonances import cavity_linewidth, modulus_minima, pair_features, sharp_cavity, system_poles
from .shell_operator_algebra import (OnShellSpectrum, ShellContext, ShellOperator, add, apply, compose,
                                     delta_spectrum, diagonal, invert)
from .single_photon import emitter_amplitudes, reinjection_amplitudes, system_single

SQRT2 = math.sqrt(2.0)


def loop_zeros(E: float, params: PhysicalParams) -> list:
    """Zeros in Delta of the even and odd split-pair loop denominators."""
    if params.r == 0.0:
        return []
    rho2 = round_trip_factor(E, params)
    g = params.linewidth
    d = 0.5 * E - params.omega_int
    out = []
    for num, den in (((rho2 * (d * d - g * g) - (d + 1j * g) ** 2), rho2 - 1.0),
                     (((d + 1j * g) ** 2 + rho2 * (d * d + g * g)), 1.0 + rho2)):
        if den != 0:
            out.append(np.sqrt(num / den + 0j))
    return out


def pair_diagonal(E: float, params: PhysicalParams, y: np.ndarray) -> np.ndarray:
    """Diagonal part of the (2,2) entry of the whole-system pair transfer block.

    This is the kernel-free skeleton of :func:`assemble_system`; its zeros
    are sharp pair resonances of the together-pair bookkeeping.
    """
    half = 0.5 * E
    tk, rk = emitter_amplitudes(half + y, params)
    tp, rp = emitter_amplitudes(half - y, params)
    rp2 = SQRT2 * round_trip_factor(E, params)
    d12 = 0.5 * (tk * rp + rk * tp)
    loop = rp2 * d12 * SQRT2 * d12 / (1.0 - rp2 * (tk * tp + rk * rp) / SQRT2)
    T, R = tk * tp + loop, rk * rp + loop
    mirror = np.array(mirror_pair_matrix(params), dtype=complex)
    free = np.array(free_pair_matrix(E, params.half_length), dtype=complex)
    left = mirror @ free
    right = free @ mirror
    e11, e12, e21, e22 = T - R * R / T, R / T, -R / T, 1.0 / T
    row = (left[1, 0] * e11 + left[1, 1] * e21, left[1, 0] * e12 + left[1, 1] * e22)
    return row[0] * right[0, 1] + row[1] * right[1, 1]


def pair_resonances(E: float, params: PhysicalParams, window: float) -> list:
    """Sharp zeros of :func:`pair_diagonal` for |Delta| <= window, as (|Delta|, width) pairs."""
    scale = min(cavity_linewidth(params), params.linewidth)
    if scale <= 0.0:
        # A decoupled emitter has no pair structure.
        return []
    n = int(min(400_000, max(256, math.ceil(window / (0.25 * scale)))))
    y = np.linspace(0.0, window, n + 1)
    with np.errstate(all="ignore"):
        d = pair_diagonal(E, params, y + 0j)
        m = np.abs(d * (emitter_amplitudes(0.5 * E + y, params)[0] * emitter_amplitudes(0.5 * E - y, params)[0])) ** 2
    m = np.where(np.isfinite(m), m, np.inf)
    return [(abs(p), w) for p, w in modulus_minima(y, m) if w < 0.5 * params.linewidth]


def shell_context(E: float, params: PhysicalParams, rtol: float = 1e-10) -> ShellContext:
    """Integration context for the pair at total energy E.

    The straight path is detoured above the real zeros of the emitter
    transmission amplitude at Delta = +-(Omega - E/2), where 1/t_k or 1/t_p
    appear in intermediate profiles; the detour radius stays well inside the
    distance to every genuine pole.
    """
    g = params.linewidth
    star = params.omega_int - 0.5 * E
    feats = [(abs(star), g)]
    zs = loop_zeros(E, params)
    radius = g
    for z in zs:
        feats.append((abs(z.real), max(abs(z.imag), 1e-3 * g)))
        for s in (star, -star):
            radius = min(radius, abs(z - s), abs(-z - s))
    # Dressed single-photon poles q - i w appear in the background at
    # Delta = +-(q - E/2 - i w); the arcs must not reach them.
    if params.r > 0 and params.gamma > 0:
        span = max(1.0, 10 * params.gamma_int)
        for q, w in system_poles(params, params.omega_int - span, params.omega_int + span):
            z = complex(q - 0.5 * E, -w)
            for s in (star, -star):
                radius = min(radius, abs(z - s), abs(-z - s))
    radius = 0.3 * radius
    y_core = max([abs(star)] + [abs(z.real) for z in zs]) + 30.0 * g
    if zs:
        feats += pair_resonances(E, params, y_core)
    truncate = sharp_cavity(params)
    if truncate:
        # Integrands decay at least as |Delta|^-4 relative to their core,
        # so the neglected tails are below rtol beyond this half-width.
        y_core = max(y_core, params.gamma_int * rtol ** (-1.0 / 3.0))
        feats += pair_features(E, params, y_core)
    # The straight part is subdivided on the emitter scale near the core and
    # left to feature grading further out.
    max_len = max(2.0 * g, y_core / 256.0)
    return ShellContext(E, Contour((star, -star), radius, 1), tuple(feats), rtol, y_core, max_len=max_len,
                        truncate=truncate)


@dataclass(frozen=True)
class TransferBlock:
    """2x2 block of shell operators mapping left-side to right-side pair amplitudes."""

    a11: ShellOperator
    a12: ShellOperator
    a21: ShellOperator
    a22: ShellOperator

    def __matmul__(self, other: "TransferBlock") -> "TransferBlock":
        c = compose
        return TransferBlock(
            add(c(self.a11, other.a11), c(self.a12, other.a21)),
            add(c(self.a11, other.a12), c(self.a12, other.a22)),
            add(c(self.a21, other.a11), c(self.a22, other.a21)),
            add(c(self.a21, other.a12), c(self.a22, other.a22)),
        )

    @classmethod
    def scalar(cls, ctx: ShellContext, m) -> "TransferBlock":
        return cls(diagonal(ctx, m[0][0]), diagonal(ctx, m[0][1]), diagonal(ctx, m[1][0]), diagonal(ctx, m[1][1]))

    def entries(self):
        return (self.a11, self.a12, self.a21, self.a22)


def mirror_pair_matrix(params: PhysicalParams):
    """Together-pair mirror transfer matrix with t -> t^2 and r -> r^2."""
    t2 = params.t_mirror ** 2
    r2 = params.r ** 2
    return [[t2 - r2 * r2 / t2, r2 / t2], [-r2 / t2, 1.0 / t2]]


def free_pair_matrix(E: float, length: float):
    ph = np.exp(1j * E * length)
    return [[ph, 0.0], [0.0, 1.0 / ph]]


def emitter_transfer(red: ReducedEmitter) -> TransferBlock:
    """Transfer form [[T - R T^-1 R, R T^-1], [-T^-1 R, T^-1]] of the reduced emitter."""
    T, R = red.T, red.R
    tinv = invert(T)
    rt = compose(R, tinv)
    return TransferBlock(add(T, compose(rt, R).scaled(-1.0)), rt, compose(tinv, R).scaled(-1.0), tinv)


def _scalar_times_block(ctx, m, blk: TransferBlock, left: bool) -> TransferBlock:
    s = TransferBlock.scalar(ctx, m)
    return s @ blk if left else blk @ s


def assemble_system(ctx: ShellContext, params: PhysicalParams, red: ReducedEmitter | None = None,
                    odd_channel: bool = False) -> TransferBlock:
    """Mirror . free . emitter . free . mirror for a together pair."""
    if params.t_mirror == 0:
        raise ZeroDivisionError("perfect mirror (r = 1) rejected")
    red = red or reduced_emitter(ctx, params, odd_channel)
    em = emitter_transfer(red)
    mir = mirror_pair_matrix(params)
    fr = free_pair_matrix(ctx.energy, params.half_length)
    mf = np.array(mir) @ np.array(fr)
    fm = np.array(fr) @ np.array(mir)
    return _scalar_times_block(ctx, mf.tolist(), _scalar_times_block(ctx, fm.tolist(), em, False), True)


@dataclass(frozen=True)
class PacketSet:
    """Named intermediate spectra of one pipeline run.

    Attributes:
        p1: Together pair transmitted out of the left mirror.
        p2: Contribution from a split at the left mirror.
        p3: Contribution from the split pair leaving the emitter.
        p4: Together pair reflected out of the right mirror.
        p5: Together pair inside, moving right toward the emitter.
        p6: Together pair inside, moving left toward the emitter.
        p7: Split pair leaving the emitter toward both mirrors (per sqrt 2).
        p7_odd: Exchange-odd part of the split pair, if computed.
    """

    p1: OnShellSpectrum
    p2: OnShellSpectrum
    p3: OnShellSpectrum
    p4: OnShellSpectrum
    p5: OnShellSpectrum
    p6: OnShellSpectrum
    p7: OnShellSpectrum
    p7_odd: OnShellSpectrum | None = None


class _Reinjection:
    """Reinjection amplitudes of both photons, cached for the last abscissa array.

    The four shell profiles built from Y and Z share one single-photon
    solve per evaluation point.
    """

    def __init__(self, E: float, params: PhysicalParams):
        self.half = 0.5 * E
        self.params = params
        self._y = None
        self._vals = None

    def values(self, y):
        if y is not self._y:
            yk, zk = reinjection_amplitudes(self.half + y, self.params)
            yp, zp = reinjection_amplitudes(self.half - y, self.params)
            self._y, self._vals = y, (yk, zk, yp, zp)
        return self._vals

    def profile(self, which: str) -> pf.Profile:
        if which == "Yk+Yp":
            fn = lambda y: self.values(y)[0] + self.values(y)[2]
        elif which == "Zk+Zp":
            fn = lambda y: self.values(y)[1] + self.values(y)[3]
        else:
            fn = lambda y: self.values(y)[1] - self.values(y)[3]
        return pf.Func(fn, which)


def run_pipeline(E: float, delta0: float, params: PhysicalParams, rtol: float = 1e-10,
                 odd_channel: bool | None = None, ctx: ShellContext | None = None):
    """Transmitted two-photon spectrum for a monochromatic pair at energy E.

    Args:
        E: Total energy (angular units).
        delta0: Half-difference of the incident pair.
        params: Physical parameters.
        rtol: Quadrature tolerance.
        odd_channel: Include the exchange-odd split channel. The default
            includes it exactly when delta0 != 0; for delta0 = 0 it
            contributes nothing.
        ctx: Optional prebuilt context.

    Returns:
        Tuple (final_transmitted, packets).
    """
    ctx = ctx or shell_context(E, params, rtol)
    if odd_channel is None:
        odd_channel = delta0 != 0.0
    t, r = params.t_mirror, params.r
    ph = np.exp(1j * E * params.half_length)
    f_in = delta_spectrum(ctx, delta0)
    red = reduced_emitter(ctx, params, odd_channel)
    ts = assemble_system(ctx, params, red)
    p1_op = invert(ts.a22)
    p1 = apply(p1_op, f_in)
    p4 = apply(compose(ts.a12, p1_op), f_in)
    t2, r2 = t * t, r * r
    p5 = p1.scaled(ph * r2 / t2)
    p6 = f_in.scaled(ph * (t2 - r2 * r2 / t2)) + p4.scaled(ph * r2 / t2)
    together = p5 + p6
    ops = red.ops
    p7 = apply(red.loop_inverse, apply(ops.T21, together)).scaled(1.0 / SQRT2)
    rj = _Reinjection(E, params)
    if r == 0.0:
        zero = p1.scaled(0.0)
        p2 = p3 = zero
        p7_odd = None
    else:
        p2 = p1.multiplied(rj.profile("Yk+Yp")).scaled(r / t)
        p3 = p7.multiplied(rj.profile("Zk+Zp")).scaled(t * r * ph)
        p7_odd = None
        if odd_channel:
            _, feed = odd_channel_profiles(ops, E, params)
            p7_odd = (p5 + p6.scaled(-1.0)).multiplied(feed)
            p3 = p3 + p7_odd.multiplied(rj.profile("Zk-Zp")).scaled(t * r * ph)
    final = p1 + p2 + p3
    return final, PacketSet(p1, p2, p3, p4, p5, p6, p7, p7_odd)


def coherent_amplitude(E: float, delta0: float, params: PhysicalParams) -> complex:
    """Plane-wave part of the transmitted pair, t_sys(k0) t_sys(p0).

    The pipeline reproduces this product exactly; computing it directly
    flags single-photon transmission zeros before any operator is built.
    """
    half = 0.5 * E
    t = system_single(np.array([half + delta0, half - delta0]), params).t
    return complex(t[0] * t[1])
