"""Correlation functions and energy scans."""

import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from conftest import energy
from wqed2p import profiles as pf
from wqed2p.core_model import HIGH_Q, LOW_Q
from wqed2p.observables import (CorrelationCurve, DivergentG2, _tail_exp, echo_period, fourier_t2, g2,
                                g2_at_zero, half_width, parabolic_minima, scan_g20, tail_transform)
from wqed2p.shell_operator_algebra import OnShellSpectrum, ShellContext, delta_spectrum
from wqed2p.system_pipeline import run_pipeline

BARE = LOW_Q.with_(r=0.0)
G = LOW_Q.gamma_int


def test_zero_background_is_plane_wave():
    ctx = ShellContext(energy(0.322))
    s = delta_spectrum(ctx, 0.0, 0.3 - 0.4j)
    curve = g2(fourier_t2(s, np.linspace(-5, 5, 11), BARE), s)
    np.testing.assert_allclose(np.abs(curve.t2), 2 * 0.5, rtol=1e-15)
    np.testing.assert_allclose(curve.g2, 1.0, rtol=1e-15)


def test_lorentzian_background_transform():
    a = BARE.linewidth
    ctx = ShellContext(energy(0.325), y_core=50 * a)
    s = OnShellSpectrum(ctx, 0.0, 0.0, pf.Func(lambda y: 1.0 / (y * y + a * a), "L"))
    x = np.array([0.0, 0.5, 2.0, 7.0])
    curve = fourier_t2(s, x, BARE, rtol=1e-12)
    expected = np.pi / a * np.exp(-a * x / G)
    np.testing.assert_allclose(curve.t2, expected, rtol=1e-8)


@pytest.mark.parametrize("omega", [0.7, 3.0, -2.0])
def test_tail_integral_against_quadpack(omega):
    # Finite interval [y, Y] so QUADPACK's oscillatory rule works on a bounded range.
    y, big = 1.5, 400.0
    re = sp_integrate.quad(lambda d: 1 / d ** 2, y, big, weight="cos", wvar=abs(omega), limit=2000)[0]
    im = sp_integrate.quad(lambda d: 1 / d ** 2, y, big, weight="sin", wvar=abs(omega), limit=2000)[0]
    got = _tail_exp(np.array([omega]), y)[0] - _tail_exp(np.array([omega]), big)[0]
    assert got == pytest.approx(re + 1j * math.copysign(1.0, omega) * im, rel=1e-10)


def test_tail_transform_of_constant_profile():
    # P = 1: int_{|D|>y} exp(i x D) / D^2 dD = 2 Re I(x).
    y, x = 2.0, np.array([0.0, 0.3, 1.7])
    got = tail_transform(np.ones(64), y, math.pi, x)
    np.testing.assert_allclose(got, 2 * _tail_exp(x, y).real, rtol=1e-12, atol=1e-15)


def test_parseval_on_bare_emitter_curve():
    fin, _ = run_pipeline(energy(0.322), 0.0, BARE)
    # |t2 - 2a|^2 is even with a kink at x = 0, so integrate one side with Simpson's rule.
    x = np.arange(0.0, 60.0 + 1e-9, 0.05)
    curve = fourier_t2(fin, x, BARE)
    dev = curve.t2 - 2 * fin.delta_amp
    lhs = 2 * sp_integrate.simpson(np.abs(dev) ** 2, x=x / G)
    rhs = 2 * np.pi * sp_integrate.quad(lambda d: abs(fin.background_values(np.array([d + 0j]))[0]) ** 2,
                                        -np.inf, np.inf, epsabs=0, epsrel=1e-12, limit=500,
                                        points=None)[0]
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_g2_is_even_for_centered_pair():
    fin, _ = run_pipeline(energy(0.322), 0.0, LOW_Q)
    x = np.array([0.5, 3.0, 10.0])
    curve = g2(fourier_t2(fin, np.concatenate([-x, x]), LOW_Q), fin)
    np.testing.assert_allclose(curve.g2[:3], curve.g2[3:], rtol=1e-8)


def test_transmission_zero_is_divergent():
    fin, _ = run_pipeline(energy(0.325), 0.0, BARE)
    curve = g2(fourier_t2(fin, np.array([0.0, 1.0]), BARE), fin)
    assert curve.divergent
    assert np.all(np.isnan(curve.g2))
    assert np.all(curve.density > 0)
    with pytest.raises(DivergentG2):
        g2_at_zero(fin, BARE)


def test_echo_period():
    assert echo_period(BARE) is None
    assert echo_period(LOW_Q) == pytest.approx(2 * 2 * math.pi * 0.004)


def test_half_width_of_exponential():
    x = np.linspace(-10, 10, 20001)
    curve = CorrelationCurve(x, 1.0 + np.exp(-np.abs(x)) + 0j)
    curve.norm = 1.0
    # |t2|^2 - 1 = 2 e^{-|x|} + e^{-2|x|}; half of 3 is reached at e^{-x} = sqrt(2.5) - 1.
    assert half_width(curve) == pytest.approx(-math.log(math.sqrt(2.5) - 1), abs=1e-6)


def test_half_width_envelope_ignores_echo_gaps():
    x = np.arange(0, 20, 0.01)
    env = np.exp(-x / 5.0)
    comb = np.where(np.abs((x + 0.5) % 1.0 - 0.5) < 0.02, env, 0.0)
    comb[0] = 1.0
    curve = CorrelationCurve(x, np.sqrt(1.0 + comb) + 0j)
    curve.norm = 1.0
    assert half_width(curve) < 0.05
    assert half_width(curve, period=1.0) == pytest.approx(5 * math.log(2), abs=0.6)


def test_parabolic_minima():
    x = np.linspace(0, 1, 21)
    y = (x - 0.33) ** 2
    (xm, ym), = parabolic_minima(x, y)
    assert xm == pytest.approx(0.33, abs=1e-12)
    assert ym == pytest.approx(0.0, abs=1e-12)
    y2 = np.cos(6 * np.pi * x)
    assert len(parabolic_minima(x, y2)) == 3
    y2[10] = np.nan
    assert all(abs(m - 0.5) > 0.06 for m, _ in parabolic_minima(x, y2))


@pytest.mark.parametrize("params", [LOW_Q, HIGH_Q])
def test_decoupled_scan_is_flat(params):
    flat = params.with_(gamma=0.0)
    e = params.omega + np.array([-0.01, -0.002, 0.003])
    res = scan_g20(e, flat)
    assert res.status == ["ok"] * 3
    np.testing.assert_allclose(res.g20, 1.0, atol=1e-12)


def test_scan_reports_failures_and_keeps_order():
    e = np.array([0.324, 0.325, 0.326])
    serial = scan_g20(e, BARE)
    assert serial.status == ["ok", "divergent", "ok"]
    assert math.isnan(serial.g20[1])
    parallel = scan_g20(e, BARE, workers=2)
    np.testing.assert_array_equal(parallel.e_half, e)
    np.testing.assert_array_equal(parallel.g20, serial.g20)
