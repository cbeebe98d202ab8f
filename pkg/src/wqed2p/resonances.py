"""Locating sharp single-photon and pair features for quadrature grading."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import newton

from .core_model import PhysicalParams
from .single_photon import emitter_amplitudes, system_transfer


def cavity_linewidth(params: PhysicalParams) -> float:
    """Amplitude decay rate of the empty cavity modes (angular units)."""
    r = params.r
    if r <= 0.0:
        return math.inf
    return -math.log(r) / (2.0 * params.half_length)


def cavity_modes(params: PhysicalParams, lo: float, hi: float) -> np.ndarray:
    """Real parts of the empty two-mirror cavity resonances inside [lo, hi]."""
    spacing = math.pi / (2.0 * params.half_length)
    n0 = math.ceil(lo / spacing)
    n1 = math.floor(hi / spacing)
    return spacing * np.arange(n0, n1 + 1)


def system_poles(params: PhysicalParams, lo: float, hi: float, step: float | None = None) -> list:
    """Approximate poles of the whole-system single-photon response in [lo, hi].

    The magnitude of the transfer-matrix entry m22 is sampled on a fine grid;
    each local minimum is refined by a parabola through |m22|^2, whose
    curvature gives the distance of the pole from the real axis.

    Returns:
        List of (position, half_width) pairs.
    """
    kappa = cavity_linewidth(params)
    scale = min(kappa, 0.5 * params.gamma_int) if params.gamma > 0 else kappa
    if not math.isfinite(scale):
        scale = 0.5 * params.gamma_int
    step = step or scale / 4.0
    n = int(min(2_000_000, max(64, math.ceil((hi - lo) / step))))
    q = np.linspace(lo, hi, n + 1)
    tm = system_transfer(q, params, scaled=True)
    m = np.abs(tm.m22 / emitter_amplitudes(q, params)[0]) ** 2 if params.gamma > 0 else np.abs(tm.m22) ** 2
    return [refine_pole(params, pos, width) for pos, width in modulus_minima(q, m)]


def refine_pole(params: PhysicalParams, pos: float, width: float):
    """Polish a (position, half_width) pole estimate by complex Newton iteration.

    The pole is a zero of the scaled m22 entry in the lower half plane. The
    estimate is kept when the iteration does not converge nearby.

    Returns:
        Tuple (position, half_width).
    """
    def f(k):
        return complex(np.asarray(system_transfer(np.array([k]), params, scaled=True).m22)[0])

    try:
        z = newton(f, complex(pos, -width), tol=1e-14, maxiter=50)
    except (RuntimeError, OverflowError, ZeroDivisionError):
        return pos, width
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)) or z.imag >= 0:
        return pos, width
    if abs(z - complex(pos, -width)) > 10.0 * width:
        return pos, width
    return z.real, -z.imag


def modulus_minima(q: np.ndarray, m: np.ndarray) -> list:
    """Near-zeros of a sampled squared modulus, as (position, half_width) pairs.

    Each local minimum is refined by a parabola through three samples; the
    curvature gives the distance of the zero from the real axis.
    """
    idx = np.nonzero((m[1:-1] < m[:-2]) & (m[1:-1] <= m[2:]))[0] + 1
    out = []
    h = q[1] - q[0]
    for i in idx:
        y0, y1, y2 = m[i - 1], m[i], m[i + 1]
        if not np.isfinite(y0 + y1 + y2):
            continue
        curv = (y0 - 2 * y1 + y2) / (h * h)
        if curv <= 0:
            out.append((q[i], h))
            continue
        shift = 0.5 * h * (y0 - y2) / (y0 - 2 * y1 + y2)
        vmin = y1 - 0.25 * (y0 - y2) * shift / h
        width = math.sqrt(max(vmin, 0.0) / (0.5 * curv)) if vmin > 0 else h
        out.append((q[i] + shift, max(width, h / 4)))
    return out


def pair_features(E: float, params: PhysicalParams, window: float) -> list:
    """Single-photon resonances mapped onto the shell half-difference.

    A photon of momentum E/2 +- Delta meets a resonance at q when
    |Delta| = |q - E/2|; empty-cavity modes are used away from the emitter
    and the dressed poles near it.

    Returns:
        List of (|Delta|, width) pairs within ``window``.
    """
    half = 0.5 * E
    feats = []
    if params.r > 0:
        kappa = cavity_linewidth(params)
        for q in cavity_modes(params, half - window, half + window):
            feats.append((abs(q - half), kappa))
        w0 = params.omega_int
        span = max(1.0, 10 * params.gamma_int)
        for q, w in system_poles(params, w0 - span, w0 + span):
            if abs(q - half) <= window:
                feats.append((abs(q - half), w))
    return feats


def sharp_cavity(params: PhysicalParams) -> bool:
    """True when cavity modes are much narrower than their spacing.

    Then every mode out to infinity is a sharp peak, and integrals over the
    half-difference are truncated rather than mapped to infinity.
    """
    spacing = math.pi / (2.0 * params.half_length)
    return params.r > 0 and cavity_linewidth(params) < 0.01 * spacing
