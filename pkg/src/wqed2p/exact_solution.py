"""Closed-form two-photon transmission used as an independent oracle.

A single emitter coupled locally to a linear structured bath (here the
waveguide with two mirrors) has a two-photon scattering matrix fixed by the
single-excitation Green function G(w) = 1/(w - Omega - Sigma(w)) and the
two-excitation bubble chi(E) = (i/2 pi) int G(w) G(E - w) dw. For a pair
entering from one side and leaving from the other, the transmitted density
on the shell is

    t(k0) t(p0) [delta(D - D0) + delta(D + D0)] + (i/pi) gamma^2 U(D0) U(D) / chi(E),

with U(D) = u(k) u(p) G(k) G(p) and u the amplitude with which an external
photon reaches the emitter. None of this uses the operator algebra, so it
checks the transfer-matrix pipeline end to end.
"""

from __future__ import annotations

import math

import numpy as np

from . import profiles as pf
from .core_model import PhysicalParams
from .quadrature import REAL_LINE, initial_partition, integrate
from .resonances import cavity_modes, system_poles
from .shell_operator_algebra import OnShellSpectrum, ShellContext
from .single_photon import system_single


def _rho(w, params):
    return params.r * np.exp(2j * np.asarray(w) * params.half_length)


def self_energy(w, params: PhysicalParams):
    """Emitter self-energy inside the cavity."""
    rho = _rho(w, params)
    return -1j * params.linewidth * (1 + rho) / (1 - rho)


def green(w, params: PhysicalParams):
    """Single-excitation Green function of the emitter."""
    w = np.asarray(w)
    return 1.0 / (w - params.omega_int - self_energy(w, params))


def coupling(w, params: PhysicalParams):
    """Amplitude of an external photon at the emitter position (bare cavity field)."""
    w = np.asarray(w)
    return params.t_mirror * np.exp(1j * w * params.half_length) / (1 - _rho(w, params))


def chi(E: float, params: PhysicalParams, rtol: float = 1e-11, window: float = 200.0) -> complex:
    """Two-excitation bubble (i/2 pi) int G(w) G(E - w) dw.

    The memoryless part 1/(E - 2 Omega + i Gamma) is known in closed form;
    only the cavity-induced remainder, which decays as w^-3, is integrated.
    """
    g = params.linewidth
    w0 = params.omega_int
    markov = 1.0 / (E - 2 * w0 + 2j * g)
    if params.r == 0.0:
        return markov
    gm = lambda w: 1.0 / (w - w0 + 1j * g)

    def f(w):
        return green(w, params) * green(E - w, params) - gm(w) * gm(E - w)

    half = 0.5 * E
    lo, hi = half - window, half + window
    modes = cavity_modes(params, lo, hi)
    kappa = -math.log(params.r) / (2 * params.half_length)
    feats = [(m, kappa) for m in modes] + [(E - m, kappa) for m in modes]
    near = system_poles(params, w0 - 1.0, w0 + 1.0)
    feats += near + [(E - p, w) for p, w in near]
    cuts = sorted({lo, hi} | {p for p, _ in feats if lo < p < hi})
    from .quadrature import LINE, Piece
    pieces = [Piece(LINE, complex(a), b) for a, b in zip(cuts[:-1], cuts[1:])]
    table = initial_partition(pieces, feats, max_len=0.05)
    res = integrate(f, table, rtol=rtol, max_intervals=400000)
    return markov + 1j / (2 * math.pi) * complex(res.value)


def pair_vertex(E: float, params: PhysicalParams):
    """Profile U(D) = u(k) u(p) G(k) G(p) with k = E/2 + D, p = E/2 - D."""
    half = 0.5 * E

    def fn(y):
        k, p = half + y, half - y
        return coupling(k, params) * coupling(p, params) * green(k, params) * green(p, params)

    return pf.Func(fn, "U")


def exact_transmitted(ctx: ShellContext, params: PhysicalParams, delta0: float = 0.0,
                      chi_value: complex | None = None) -> OnShellSpectrum:
    """Exact transmitted spectrum for a monochromatic pair incident on the system."""
    E = ctx.energy
    half = 0.5 * E
    t = system_single(np.array([half + delta0, half - delta0]), params).t
    amp = complex(t[0] * t[1])
    if params.gamma == 0.0:
        return OnShellSpectrum(ctx, amp, delta0, None)
    c = chi(E, params) if chi_value is None else chi_value
    U = pair_vertex(E, params)
    u0 = complex(U(np.array([delta0 + 0j]))[0])
    coeff = 1j / math.pi * params.linewidth ** 2 * u0 / c
    return OnShellSpectrum(ctx, amp, delta0, pf.product(U, coeff))
