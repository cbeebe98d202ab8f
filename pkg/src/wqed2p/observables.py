"""Spatial two-photon amplitude, intensity correlations and energy scans.

The transmitted pair amplitude as a function of detector separation x is
the Fourier transform of the shell spectrum in Delta,

    t2(x) = a (e^{i Delta0 x} + e^{-i Delta0 x}) + int b(Delta) e^{i Delta x} dDelta,

where a is the coherent amplitude and b the background; the common
center-of-mass phase is dropped. For Delta0 = 0 the plane-wave part is 2a,
so g2(x) = |t2(x)|^2 / |2a|^2 tends to 1 at large separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sici

from .core_model import PhysicalParams
from .quadrature import LINE, Piece, initial_partition, integrate
from .resonances import cavity_linewidth, pair_features
from .shell_operator_algebra import OnShellSpectrum


class DivergentG2(ArithmeticError):
    """The coherent amplitude vanishes, so g2 has no finite normalization."""


@dataclass
class CorrelationCurve:
    """Sampled correlation data.

    Attributes:
        x_grid: Detector separations in units of 1/Gamma.
        t2: Complex pair amplitude.
        density: |t2|^2.
        g2: Normalized correlation (NaN if divergent).
        norm: Normalization D = |2a|^2 (0 if divergent).
        divergent: True when the coherent amplitude is below 1e-12.
    """

    x_grid: np.ndarray
    t2: np.ndarray
    density: np.ndarray = field(default=None)
    g2: np.ndarray = field(default=None)
    norm: float = float("nan")
    divergent: bool = False

    def __post_init__(self):
        if self.density is None:
            self.density = np.abs(self.t2) ** 2


def _tail_exp(omega: np.ndarray, y: float) -> np.ndarray:
    """int_y^inf exp(i omega D) / D^2 dD for real omega and y > 0."""
    omega = np.asarray(omega, dtype=float)
    w = np.abs(omega) * y
    out = np.full(omega.shape, 1.0 / y, dtype=complex)
    nz = w > 0
    si, ci = sici(w[nz])
    # int_y^inf exp(i omega D) / D dD = -Ci(|omega| y) + i sign(omega) (pi/2 - Si(|omega| y))
    e1 = -ci + 1j * np.sign(omega[nz]) * (0.5 * np.pi - si)
    out[nz] = np.exp(1j * omega[nz] * y) / y + 1j * omega[nz] * e1
    return out


def tail_transform(samples: np.ndarray, y: float, period: float, x: np.ndarray) -> np.ndarray:
    """Transform of an even background beyond |Delta| = y.

    The background is modelled as P(Delta) / Delta^2 with P periodic; the
    samples are P on one period starting at y. Each harmonic p_n exp(i w_n D)
    then contributes p_n [I(w_n + x) + I(w_n - x)], with I from
    :func:`_tail_exp`.
    """
    n = len(samples)
    coef = np.fft.fft(samples) / n
    freq = 2.0 * np.pi * np.fft.fftfreq(n, d=period / n)
    # Harmonics referenced to D = 0 rather than D = y.
    coef = coef * np.exp(-1j * freq * y)
    out = np.empty(x.shape, dtype=complex)
    for i, xi in enumerate(x):
        out[i] = np.sum(coef * (_tail_exp(freq + xi, y) + _tail_exp(freq - xi, y)))
    return out


def fourier_features(E: float, params: PhysicalParams, window: float) -> list:
    """Sharp single-photon structure mapped onto the shell half-difference."""
    return pair_features(E, params, window)


def default_window(E: float, params: PhysicalParams) -> float:
    """Half-width of the Delta window integrated numerically."""
    g = params.linewidth
    return abs(params.omega_int - 0.5 * E) + 400.0 * g


def fourier_t2(s: OnShellSpectrum, x_grid, params: PhysicalParams, rtol: float = 1e-10,
               window: float | None = None, chunk: int = 64) -> CorrelationCurve:
    """Fourier transform of a shell spectrum onto detector separations.

    The background is integrated along the shell context's contour up to
    |Delta| = window; beyond it the background is replaced by its
    period-averaged 1/Delta^2 asymptote, whose transform is closed-form.

    Args:
        s: Transmitted spectrum.
        x_grid: Separations in units of 1/Gamma (of l if Gamma = 0).
        params: Physical parameters (for Gamma and feature locations).
        rtol: Relative quadrature tolerance.
        window: Integration half-width in Delta (default from parameters).
        chunk: Number of x points integrated together.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    # 1/Gamma is undefined for a decoupled emitter; x is then in units of l.
    x = x_grid / params.gamma_int if params.gamma_int > 0 else x_grid * params.half_length
    E = s.energy
    d0 = s.delta_pos
    t2 = s.delta_amp * (np.exp(1j * d0 * x) + np.exp(-1j * d0 * x))
    if s.background is None:
        return CorrelationCurve(x_grid, t2.astype(complex))
    ctx = s.ctx
    Y = window or default_window(E, params)
    feats = list(ctx.features) + fourier_features(E, params, Y)
    pos = [p for p, _ in feats]
    pieces = [pc for pc in ctx.contour.pieces(pos + [-p for p in pos], Y) if pc.kind != 2]
    allf = feats + [(-p, w) for p, w in feats]
    table = initial_partition(pieces, allf, max_len=min(ctx.max_len, Y / 50))
    bg = s.background
    # Beyond the window the background is P(Delta)/Delta^2 with P periodic:
    # one photon crossing the cavity picks up exp(2i k l), so the period in
    # Delta is pi/l. One period is sampled finely enough to resolve the
    # narrowest cavity line.
    period = math.pi / params.half_length
    n = 1024
    if params.r > 0:
        n = max(n, int(2 ** math.ceil(math.log2(16.0 / cavity_linewidth(params)))))
    probe = Y + period * np.arange(n) / n
    samples = probe ** 2 * bg(probe + 0j)
    out = np.empty(x.shape, dtype=complex)
    with np.errstate(all="ignore"):
        for i in range(0, x.size, chunk):
            xs = x[i:i + chunk]

            def f(z, xs=xs):
                return bg(z)[:, None] * np.exp(1j * z[:, None] * xs[None, :])

            res = integrate(f, table, rtol=rtol, max_intervals=400000)
            out[i:i + chunk] = res.value
    out = out + tail_transform(samples, Y, period, x)
    return CorrelationCurve(x_grid, t2 + out)


def g2(curve: CorrelationCurve, s: OnShellSpectrum) -> CorrelationCurve:
    """Fill the normalized correlation of a curve.

    The normalization is the plane-wave intensity |2a|^2. A coherent
    amplitude below 1e-12 marks a transmission zero; then the curve is
    flagged divergent and g2 is NaN while the density is kept.
    """
    a = s.delta_amp
    if abs(a) < 1e-12:
        curve.divergent = True
        curve.norm = 0.0
        curve.g2 = np.full(curve.density.shape, np.nan)
        return curve
    curve.norm = abs(2.0 * a) ** 2
    curve.g2 = curve.density / curve.norm
    return curve


def g2_at_zero(s: OnShellSpectrum, params: PhysicalParams, rtol: float = 1e-10) -> float:
    """g2(0) of a transmitted spectrum.

    Raises:
        DivergentG2: If the coherent amplitude vanishes.
    """
    curve = g2(fourier_t2(s, np.array([0.0]), params, rtol), s)
    if curve.divergent:
        raise DivergentG2("coherent transmission vanishes")
    return float(curve.g2[0])


def echo_period(params: PhysicalParams) -> float | None:
    """Separation between cavity echoes in |t2(x)|^2, in units of 1/Gamma.

    The background repeats in Delta with period pi/l, so its transform is a
    train of echoes spaced by 2l in x. Without mirrors there are none.
    """
    if params.r == 0.0:
        return None
    return 2.0 * params.half_length * params.gamma_int


def half_width(curve: CorrelationCurve, period: float | None = None) -> float:
    """Half-width in x where ||t2|^2 - D| drops below half its value at x = 0.

    Scans outward from the smallest |x| and interpolates linearly; returns
    the largest sample if the deviation never drops that far. With a
    ``period`` (see :func:`echo_period`) the deviation is first replaced by
    its running maximum over windows of one period, so the width describes
    the envelope of the echo train rather than the gap before the first
    echo; the grid step must then be well below the period.
    """
    order = np.argsort(np.abs(curve.x_grid), kind="stable")
    x = np.abs(curve.x_grid[order])
    dev = np.abs(curve.density[order] - curve.norm)
    if period is not None:
        lo = np.searchsorted(x, x - 0.5 * period, side="left")
        hi = np.searchsorted(x, x + 0.5 * period, side="right")
        dev = np.array([dev[a:b].max() for a, b in zip(lo, hi)])
    ref = dev[0]
    below = np.nonzero(dev <= 0.5 * ref)[0]
    if ref == 0 or below.size == 0:
        return float(x[-1])
    j = below[0]
    if j == 0:
        return 0.0
    x0, x1, y0, y1 = x[j - 1], x[j], dev[j - 1], dev[j]
    return float(x0 + (0.5 * ref - y0) * (x1 - x0) / (y1 - y0))


def parabolic_minima(xs, ys) -> list:
    """Local minima of sampled data refined by a three-point parabola.

    Returns:
        List of (x_min, y_min) pairs in increasing x.
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    out = []
    for i in range(1, len(xs) - 1):
        if not (np.isfinite(ys[i - 1:i + 2]).all()):
            continue
        if ys[i] < ys[i - 1] and ys[i] <= ys[i + 1]:
            x0, x1, x2 = xs[i - 1:i + 2]
            y0, y1, y2 = ys[i - 1:i + 2]
            den = (x0 - x1) * (x0 - x2) * (x1 - x2)
            A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
            B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
            C = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / den
            if A > 0:
                xv = -B / (2 * A)
                out.append((float(xv), float(C - B * B / (4 * A))))
            else:
                out.append((float(x1), float(y1)))
    return out


#: Coherent amplitudes below this mark a transmission zero (g2 divergent).
DIVERGENCE_THRESHOLD = 1e-12


@dataclass
class ScanResult:
    """g2(0) along an energy scan.

    Attributes:
        e_half: Scanned E/2 values (units 2 pi c / l).
        g20: g2(0) per point (NaN where divergent or failed).
        status: "ok", "divergent" or an error message per point.
        minima: Local minima of log10 g2(0) as (E/2, log10 g2(0)) pairs.
    """

    e_half: np.ndarray
    g20: np.ndarray
    status: list
    minima: list

    @property
    def log10_g20(self) -> np.ndarray:
        with np.errstate(all="ignore"):
            return np.log10(self.g20)


def g20_point(e_half: float, params: PhysicalParams, rtol: float = 1e-10):
    """g2(0) at one energy for a pair with Delta0 = 0.

    Returns:
        Tuple (value, status) where status is "ok", "divergent" or an
        error description; failures never raise.
    """
    from .quadrature import QuadratureError
    from .shell_operator_algebra import AlgebraError
    from .system_pipeline import coherent_amplitude, run_pipeline

    E = 2.0 * e_half * 2.0 * math.pi
    if abs(coherent_amplitude(E, 0.0, params)) < DIVERGENCE_THRESHOLD:
        return float("nan"), "divergent"
    try:
        fin, _ = run_pipeline(E, 0.0, params, rtol)
        return g2_at_zero(fin, params, rtol), "ok"
    except DivergentG2:
        return float("nan"), "divergent"
    except (QuadratureError, AlgebraError, FloatingPointError) as exc:
        return float("nan"), f"{type(exc).__name__}: {exc}"


def _g20_task(args):
    return g20_point(*args)


def scan_g20(e_half_values, params: PhysicalParams, rtol: float = 1e-10, workers: int = 1) -> ScanResult:
    """Scan g2(0) over E/2 and locate local minima of log10 g2(0).

    Points are independent; with ``workers > 1`` they run in a process
    pool, and results are always ordered as the input.
    """
    e_half = np.asarray(e_half_values, dtype=float)
    tasks = [(float(e), params, rtol) for e in e_half]
    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_g20_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_g20_task(t) for t in tasks]
    g20 = np.array([v for v, _ in results], dtype=float)
    status = [st for _, st in results]
    with np.errstate(all="ignore"):
        minima = parabolic_minima(e_half, np.log10(g20))
    return ScanResult(e_half, g20, status, minima)
