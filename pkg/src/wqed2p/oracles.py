"""Independent cross-checks of the numerical machinery.

Each check compares a result of the operator algebra or the pipeline with
an oracle that shares as little code with it as possible: dense matrix
discretizations, residue sums evaluated on small circles, closed-form
limits and the exact single-emitter solution. Every check returns an
:class:`OracleResult`; :func:`run_all` collects them for the CLI's
``oracle-check`` mode.
"""

from __future__ import annotations

import contextlib
import math
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate as sp_integrate

from . import profiles as pf
from .core_model import HIGH_Q, LOW_Q, TWO_PI, PhysicalParams
from .emitter_block import background_B, build_emitter_operators
from .observables import fourier_t2, g2
from .shell_operator_algebra import (OnShellSpectrum, ShellContext, ShellOperator, apply, compose,
                                     cross_matrix, grid_oracle, invert)
from .single_photon import cavity_transmission, emitter_amplitudes, system_single
from .system_pipeline import coherent_amplitude, run_pipeline, shell_context


@dataclass
class OracleResult:
    """Outcome of one cross-check.

    Attributes:
        name: Short identifier.
        residual: Largest discrepancy found (relative unless noted).
        tolerance: Threshold the residual must stay below.
        passed: residual <= tolerance.
        detail: Extra numbers for the report.
        informational: True when the check documents a known model difference
            and does not count toward the overall verdict.
    """

    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: dict
    informational: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def _result(name, residual, tolerance, detail=None, informational=False) -> OracleResult:
    residual = float(residual)
    return OracleResult(name, residual, float(tolerance), bool(residual <= tolerance), detail or {},
                        informational)


def _rel(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


# ---------------------------------------------------------------------------
# Single photon
# ---------------------------------------------------------------------------

def unitarity_residual(params: PhysicalParams, n: int = 10_000) -> float:
    """Largest | |t|^2 + |r|^2 - 1 | over n momenta spanning one cavity period around Omega.

    Both incidence sides are checked.
    """
    half_period = 0.25
    k = TWO_PI * np.linspace(params.omega - half_period, params.omega + half_period, n)
    amp = system_single(k, params)
    ok = ~amp.singular
    t2 = np.abs(amp.t[ok]) ** 2
    right = np.abs(t2 + np.abs(amp.r[ok]) ** 2 - 1.0)
    left = np.abs(t2 + np.abs(amp.r_left[ok]) ** 2 - 1.0)
    return float(max(right.max(), left.max()))


def check_unitarity(n: int = 10_000) -> OracleResult:
    res = {name: unitarity_residual(p, n) for name, p in (("low_q", LOW_Q), ("high_q", HIGH_Q))}
    return _result("single_photon_unitarity", max(res.values()), 1e-10, res)


# ---------------------------------------------------------------------------
# Operator algebra against dense matrices
# ---------------------------------------------------------------------------

def _lorentz(a: complex) -> pf.Profile:
    """Emitter-shaped profile 1 / (4 y^2 - a^2); a has positive imaginary part."""
    a2 = a * a
    return pf.Func(lambda y: 1.0 / (4.0 * y * y - a2), f"L({a:.3g})")


def _ratio(a: complex, b: complex) -> pf.Profile:
    """Diagonal (4 y^2 - b^2) / (4 y^2 - a^2): no real zeros or poles, tends to 1."""
    a2, b2 = a * a, b * b
    return pf.Func(lambda y: (4.0 * y * y - b2) / (4.0 * y * y - a2), "ratio")


def _random_width(rng, g):
    return complex(rng.uniform(-3, 3) * g, rng.uniform(0.5, 3.0) * g)


def random_operator(ctx: ShellContext, rng: np.random.Generator, n_kernels: int, g: float) -> ShellOperator:
    """Random operator with Lorentzian profiles on the emitter scale g."""
    diag = _ratio(_random_width(rng, g), _random_width(rng, g))
    ins = tuple(_lorentz(_random_width(rng, g)) for _ in range(n_kernels))
    outs = tuple(_lorentz(_random_width(rng, g)) for _ in range(n_kernels))
    coef = (rng.normal(size=(n_kernels, n_kernels)) + 1j * rng.normal(size=(n_kernels, n_kernels)))
    # Kernels of the same size as the diagonal: 1/2 int |L|^2 ~ 1/g^3.
    coef *= g ** 3 / n_kernels
    return ShellOperator(ctx, diag, ins, outs, coef)


def probe_spectrum(ctx: ShellContext, g: float, delta0: float = 0.0) -> OnShellSpectrum:
    """Delta at delta0 plus an even Gaussian and Lorentzian background."""
    s = 2.0 * g
    bg = pf.Func(lambda y: np.exp(-(y / s) ** 2) + (g * g) / (y * y + g * g), "test_bg")
    return OnShellSpectrum(ctx, 0.7 - 0.2j, delta0, bg)


class _GridSpectrum:
    """Spectrum on the oracle grid: delta amplitude plus sampled background."""

    def __init__(self, amp, pos, bg):
        self.amp, self.pos, self.bg = amp, pos, bg


def _grid_op(op: ShellOperator, mat: np.ndarray, x: np.ndarray, gs: _GridSpectrum) -> _GridSpectrum:
    out = mat @ gs.bg
    if op.ins and gs.amp != 0:
        u0 = pf.evaluate_many(op.ins, np.array([gs.pos + 0j]))[0]
        out = out + pf.evaluate_many(op.outs, x + 0j) @ (op.coef @ u0) * gs.amp
    d0 = complex(op.diag(np.array([gs.pos + 0j]))[0])
    return _GridSpectrum(d0 * gs.amp, gs.pos, out)


def _grid_inverse(op: ShellOperator, mat: np.ndarray, x: np.ndarray, gs: _GridSpectrum) -> _GridSpectrum:
    d0 = complex(op.diag(np.array([gs.pos + 0j]))[0])
    amp = gs.amp / d0
    rhs = gs.bg.copy()
    if op.ins and amp != 0:
        u0 = pf.evaluate_many(op.ins, np.array([gs.pos + 0j]))[0]
        rhs = rhs - pf.evaluate_many(op.outs, x + 0j) @ (op.coef @ u0) * amp
    return _GridSpectrum(amp, gs.pos, np.linalg.solve(mat, rhs))


def _grid_input(s: OnShellSpectrum, n: int, dmax: float) -> _GridSpectrum:
    x = np.linspace(-dmax, dmax, n)
    return _GridSpectrum(s.delta_amp, s.delta_pos, s.background_values(x + 0j))


def algebra_case(seed: int, n_kernels: int = 4, params: PhysicalParams = LOW_Q, span: float = 50.0):
    """Random operators A, B and a test spectrum in a truncated shell context.

    The context integrates over |Delta| <= span * Gamma only, the same range
    the dense oracle covers, so both approximate the same integrals.
    """
    g = params.gamma_int
    rng = np.random.default_rng(seed)
    dmax = span * g
    ctx = ShellContext(1.0, rtol=1e-13, y_core=dmax, max_len=g, truncate=True, max_intervals=200000)
    a = random_operator(ctx, rng, n_kernels, g)
    b = random_operator(ctx, rng, n_kernels, g)
    s = probe_spectrum(ctx, g, delta0=rng.uniform(0, 2) * g)
    return ctx, a, b, s, dmax


def algebra_residuals(seed: int, sizes=(501, 1001, 2001, 4001), n_kernels: int = 4) -> dict:
    """Relative max-norm differences between the algebra and dense oracles.

    Returns:
        Mapping operation -> list of residuals, one per grid size.
    """
    ctx, a, b, s, dmax = algebra_case(seed, n_kernels)
    exact = {
        "apply": apply(a, s),
        "compose": apply(compose(a, b), s),
        "invert": apply(invert(a), s),
    }
    out = {k: [] for k in exact}
    for n in sizes:
        x, _, mat_a = grid_oracle(a, n, dmax)
        _, _, mat_b = grid_oracle(b, n, dmax)
        gs = _grid_input(s, n, dmax)
        dense = {
            "apply": _grid_op(a, mat_a, x, gs),
            "compose": _grid_op(a, mat_a, x, _grid_op(b, mat_b, x, gs)),
            "invert": _grid_inverse(a, mat_a, x, gs),
        }
        for k, alg in exact.items():
            ref = dense[k]
            bg = alg.background_values(x + 0j)
            scale = max(np.max(np.abs(ref.bg)), abs(ref.amp))
            err = max(np.max(np.abs(bg - ref.bg)), abs(alg.delta_amp - ref.amp)) / scale
            out[k].append(float(err))
    return out


def _monotone(errs, floor: float = 1e-9) -> bool:
    """Errors decrease with each grid doubling, or are already below ``floor``."""
    return all(e1 < e0 or e1 < floor for e0, e1 in zip(errs[:-1], errs[1:]))


def check_algebra(seeds=(0, 1, 2), n_kernels: int = 4) -> OracleResult:
    sizes = (501, 1001, 2001, 4001)
    worst = 0.0
    monotone = True
    detail = {"sizes": list(sizes)}
    for seed in seeds:
        res = algebra_residuals(seed, sizes, n_kernels)
        detail[f"seed{seed}"] = res
        for errs in res.values():
            worst = max(worst, errs[-1])
            monotone &= _monotone(errs)
    detail["monotone"] = monotone
    r = _result("operator_algebra_vs_grid", worst, 1e-5, detail)
    r.passed = r.passed and monotone
    return r


# ---------------------------------------------------------------------------
# Single-kernel inversion closed form
# ---------------------------------------------------------------------------

def single_kernel_inverse(seed: int = 0, params: PhysicalParams = LOW_Q) -> dict:
    """Compare ``invert`` of d + c v<u, .> with -c/(1+c g), u/d and v/d.

    g = 1/2 int u v / d is evaluated independently with scipy's QUADPACK on
    the real line (the random diagonal has no real zeros).
    """
    g = params.gamma_int
    rng = np.random.default_rng(seed)
    ctx = ShellContext(1.0, rtol=1e-13, y_core=10 * g, max_len=g)
    op = random_operator(ctx, rng, 1, g)
    (c,), (u,), (v,) = op.coef[0], op.ins, op.outs
    inv = invert(op)

    def integrand(y, part):
        z = np.array([y + 0j])
        val = (u(z) * v(z) / op.diag(z))[0]
        return val.real if part == 0 else val.imag

    gi = 0.0j
    for part, unit in ((0, 1.0), (1, 1j)):
        val, _ = sp_integrate.quad(integrand, -np.inf, np.inf, args=(part,), epsabs=0, epsrel=1e-13,
                                   limit=500, points=None)
        gi += unit * 0.5 * val
    coef_expected = -c / (1.0 + c * gi)
    y = np.linspace(-20 * g, 20 * g, 41) + 0.37 * g
    z = y + 0j
    dz = op.diag(z)
    prof_err = max(_rel(inv.ins[0](z), u(z) / dz), _rel(inv.outs[0](z), v(z) / dz),
                   _rel(inv.diag(z), 1.0 / dz))
    coef_err = abs(inv.coef[0, 0] - coef_expected) / abs(coef_expected)
    # Identity check on test spectra.
    ident = compose(op, inv)
    id_err = 0.0
    for d0 in (0.0, 0.8 * g):
        s = probe_spectrum(ctx, g, d0)
        out = apply(ident, s)
        id_err = max(id_err, abs(out.delta_amp - s.delta_amp) / abs(s.delta_amp),
                     _rel(out.background_values(z), s.background_values(z)))
    return {"coef": float(coef_err), "profiles": float(prof_err), "identity": float(id_err)}


def check_single_kernel_inverse(seeds=(0, 1, 2)) -> OracleResult:
    rows = {f"seed{s}": single_kernel_inverse(s) for s in seeds}
    closed = max(max(r["coef"], r["profiles"]) for r in rows.values())
    ident = max(r["identity"] for r in rows.values())
    r = _result("single_kernel_inverse", closed, 1e-12, {**rows, "identity_tolerance": 1e-8})
    r.passed = r.passed and ident <= 1e-8
    return r


def _circle_integral(f, center: complex, radius: float, n: int = 512) -> complex:
    """Counter-clockwise contour integral on a circle by the trapezoid rule."""
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    z = center + radius * np.exp(1j * th)
    return complex(np.sum(f(z) * 1j * radius * np.exp(1j * th)) * (2 * np.pi / n))


def t22_g_residue(e_half: float, params: PhysicalParams = LOW_Q) -> complex:
    """g_int = 1/2 int B1 B2 / tt along the pipeline contour, by residues.

    The integrand is rational with poles at -a/2 (double, lower half plane),
    +a/2 (upper) and at the real zeros +-(Omega - E/2) of tt, which the
    pipeline contour passes above. Closing downward encloses -a/2 and the
    real poles; each residue is a small-circle integral.
    """
    E = 2 * e_half * TWO_PI
    w, g = params.omega_int, params.gamma_int
    a = E - 2 * w + 1j * g
    half = 0.5 * E

    def tbar(k):
        return (k - w) / (k - w + 0.5j * g)

    def h(y):
        return 1.0 / (4 * y * y - a * a) ** 2 / (tbar(half + y) * tbar(half - y))

    star = w - half
    poles = [-a / 2] + sorted({star, -star}, key=lambda p: p.real)
    # Radius keeps every circle clear of all other poles.
    all_poles = poles + [a / 2]
    total = 0j
    for p in poles:
        others = [abs(p - q) for q in all_poles if abs(p - q) > 1e-14]
        total += _circle_integral(h, p, 0.3 * min(others))
    # int over contour = -(sum of counter-clockwise circles around enclosed poles)
    return 0.5 * (-total)


def check_t22_g_int(e_half_values=(0.325, 0.322)) -> OracleResult:
    detail = {}
    worst = 0.0
    for e_half in e_half_values:
        E = 2 * e_half * TWO_PI
        ctx = shell_context(E, LOW_Q, rtol=1e-11)
        ops = build_emitter_operators(ctx, LOW_Q)
        t22 = ops.T22
        alg = cross_matrix(t22.ins, t22.outs, ctx, weight=pf.reciprocal(t22.diag))[0, 0]
        ref = t22_g_residue(e_half)
        err = abs(alg - ref) / abs(ref)
        detail[str(e_half)] = {"algebra": [alg.real, alg.imag], "residue": [ref.real, ref.imag],
                               "relative": float(err)}
        worst = max(worst, err)
    return _result("t22_g_int_residues", worst, 1e-8, detail)


# ---------------------------------------------------------------------------
# Pipeline limits
# ---------------------------------------------------------------------------

def _xgrid(x_max=50.0, step=1.0):
    n = int(round(x_max / step))
    return step * np.arange(-n, n + 1)


def direct_emitter_spectrum(ctx: ShellContext, params: PhysicalParams, delta0: float = 0.0) -> OnShellSpectrum:
    """Bare-emitter transmission of a monochromatic pair, written out directly.

    Coherent part t(k0) t(p0); background B(E; Delta0, Delta) from the
    two-photon bound-state term, with no operator algebra involved.
    """
    E = ctx.energy
    half = 0.5 * E
    tk, _ = emitter_amplitudes(np.array([half + delta0, half - delta0]), params)
    amp = complex(tk[0] * tk[1])
    bg = pf.Func(lambda y: background_B(E, delta0, y, params), "B_direct")
    return OnShellSpectrum(ctx, amp, delta0, bg)


def check_no_cavity(e_half_values=(0.322, 0.3255, 0.328), rtol: float = 1e-10) -> OracleResult:
    """Pipeline at r = 0 against the direct emitter-only spectrum on the g2 curve.

    E/2 = Omega itself is a transmission zero of the bare emitter, where g2
    is undefined, so the energies straddle it.
    """
    params = LOW_Q.with_(r=0.0)
    x = _xgrid()
    detail = {}
    worst = 0.0
    for e_half in e_half_values:
        E = 2 * e_half * TWO_PI
        fin, _ = run_pipeline(E, 0.0, params, rtol)
        ref = direct_emitter_spectrum(fin.ctx, params)
        c1 = g2(fourier_t2(fin, x, params, rtol), fin)
        c2 = g2(fourier_t2(ref, x, params, rtol), ref)
        err = float(np.max(np.abs(c1.g2 - c2.g2)))
        if not np.isfinite(err):
            err = math.inf
        detail[str(e_half)] = err
        worst = max(worst, err)
    return _result("no_cavity_reduction", worst, 1e-8, detail)


def check_coherent_factorization(params_list=(("low_q", LOW_Q, 0.322), ("high_q", HIGH_Q, 0.9966))) -> OracleResult:
    """Delta part of the pipeline output against t_sys(k0) t_sys(p0).

    For delta0 != 0 the factorization needs the exchange-odd split channel,
    which the pipeline includes by default in that case.
    """
    detail = {}
    worst = 0.0
    for name, params, e_half in params_list:
        for d0 in (0.0, 0.3 * params.linewidth):
            E = 2 * e_half * TWO_PI
            fin, _ = run_pipeline(E, d0, params)
            ref = coherent_amplitude(E, d0, params)
            err = abs(fin.delta_amp - ref) / abs(ref)
            detail[f"{name}@{d0:.3g}"] = float(err)
            worst = max(worst, err)
    return _result("coherent_factorization", worst, 1e-6, detail)


def check_decoupled_limit(e_half: float = 0.322) -> OracleResult:
    """Gamma = 0: the pair crosses the empty cavity independently, no background."""
    params = PhysicalParams(r=0.9, gamma=0.0, omega=0.325)
    E = 2 * e_half * TWO_PI
    half = 0.5 * E
    ctx = ShellContext(E, y_core=1.0)
    fin, _ = run_pipeline(E, 0.0, params, ctx=ctx)
    ref = complex(cavity_transmission(half, params) ** 2)
    y = np.linspace(-1.0, 1.0, 201) + 0j
    bg = float(np.max(np.abs(fin.background_values(y)))) if fin.background is not None else 0.0
    err = max(abs(fin.delta_amp - ref) / abs(ref), bg)
    return _result("decoupled_emitter_limit", err, 1e-12, {"delta": abs(fin.delta_amp - ref), "background": bg})


def check_odd_channel(e_half: float = 0.322) -> OracleResult:
    """The exchange-odd split channel leaves the transmitted spectrum unchanged.

    It carries no background, and the odd combination of together spectra it
    is fed from vanishes for an even incident pair.
    """
    E = 2 * e_half * TWO_PI
    ctx = shell_context(E, LOW_Q)
    f0, _ = run_pipeline(E, 0.0, LOW_Q, ctx=ctx)
    f1, _ = run_pipeline(E, 0.0, LOW_Q, odd_channel=True, ctx=ctx)
    y = np.linspace(-0.5, 0.5, 401) + 0.001
    y = ctx.contour.point(y)
    err = max(abs(f1.delta_amp - f0.delta_amp) / abs(f0.delta_amp),
              _rel(f1.background_values(y), f0.background_values(y)))
    return _result("odd_channel_identity", err, 1e-10, {})


def check_exact_solution(e_half_values=(0.322, 0.328), rtol: float = 1e-9) -> OracleResult:
    """g2(0) from the pipeline next to the exact single-emitter solution.

    Informational: the cascaded packet construction and the exact solution
    differ for a cavity-dressed emitter (see the decision log), so this
    documents the gap rather than asserting agreement.
    """
    from .exact_solution import exact_transmitted

    detail = {}
    worst = 0.0
    for e_half in e_half_values:
        E = 2 * e_half * TWO_PI
        fin, _ = run_pipeline(E, 0.0, LOW_Q, rtol)
        ex = exact_transmitted(fin.ctx, LOW_Q)
        x = np.array([0.0])
        a = g2(fourier_t2(fin, x, LOW_Q, rtol), fin).g2[0]
        b = g2(fourier_t2(ex, x, LOW_Q, rtol), ex).g2[0]
        detail[str(e_half)] = {"pipeline": float(a), "exact": float(b)}
        worst = max(worst, abs(a - b))
    return _result("exact_solution_comparison", worst, 1e-3, detail, informational=True)


# ---------------------------------------------------------------------------
# Tolerance sensitivity
# ---------------------------------------------------------------------------

@contextlib.contextmanager
def recorded_cross_integrals():
    """Collect every cross-integral matrix the operator algebra computes.

    Yields:
        A list that fills with the matrices in evaluation order.
    """
    from . import shell_operator_algebra as soa

    seen = []
    original = soa.cross_matrix

    def wrapper(*args, **kwargs):
        out = original(*args, **kwargs)
        seen.append(np.array(out))
        return out

    soa.cross_matrix = wrapper
    try:
        yield seen
    finally:
        soa.cross_matrix = original


def tolerance_sensitivity(e_half: float, params: PhysicalParams, rtol: float = 1e-10, x=None) -> dict:
    """Change of cross integrals and curves when rtol is tightened tenfold.

    Returns:
        Dict with ``integrals`` (largest relative change of any cross
        integral, each matrix measured against its largest entry),
        ``g2`` and ``density`` (largest pointwise change, density relative
        to its maximum) and ``count`` (number of integral matrices).
    """
    x = _xgrid() if x is None else x
    E = 2 * e_half * TWO_PI
    runs = []
    for tol in (rtol, rtol / 10):
        with recorded_cross_integrals() as mats:
            fin, _ = run_pipeline(E, 0.0, params, tol)
        curve = g2(fourier_t2(fin, x, params, tol), fin)
        runs.append((mats, curve))
    (m1, c1), (m2, c2) = runs
    if len(m1) != len(m2):
        raise RuntimeError("integral sequence differs between tolerances")
    ints = max((float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)) for a, b in zip(m1, m2)),
               default=0.0)
    dens = float(np.max(np.abs(c1.density - c2.density)) / np.max(np.abs(c2.density)))
    g2d = float(np.max(np.abs(c1.g2 - c2.g2))) if not c2.divergent else float("nan")
    return {"integrals": ints, "g2": g2d, "density": dens, "count": len(m1)}


CHECKS = (
    check_unitarity,
    check_algebra,
    check_single_kernel_inverse,
    check_t22_g_int,
    check_no_cavity,
    check_coherent_factorization,
    check_decoupled_limit,
    check_odd_channel,
    check_exact_solution,
)


def run_all(checks=CHECKS, seed: int = 0) -> list:
    """Run every check, timing each; exceptions are reported as failures.

    Args:
        checks: Check functions to run.
        seed: First seed of the random operator checks.
    """
    seeded = {check_algebra, check_single_kernel_inverse}
    out = []
    for check in checks:
        t0 = time.perf_counter()
        try:
            res = check(seeds=tuple(seed + i for i in range(3))) if check in seeded else check()
        except Exception as exc:  # noqa: BLE001 - a failed oracle is reported, not raised
            res = OracleResult(check.__name__.removeprefix("check_"), math.inf, 0.0, False,
                               {"error": f"{type(exc).__name__}: {exc}"})
        res.detail["seconds"] = round(time.perf_counter() - t0, 3)
        out.append(res)
    return out
