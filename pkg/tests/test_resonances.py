"""Resonance location helpers."""

import math

import numpy as np
import pytest

from conftest import energy
from wqed2p.core_model import HIGH_Q, LOW_Q
from wqed2p.exact_solution import exact_transmitted
from wqed2p.oracles import direct_emitter_spectrum
from wqed2p.resonances import cavity_linewidth, cavity_modes, modulus_minima, sharp_cavity, system_poles
from wqed2p.single_photon import system_transfer
from wqed2p.system_pipeline import shell_context


def test_cavity_modes_and_linewidth():
    modes = cavity_modes(LOW_Q, 0.0, 2 * math.pi * 0.6)
    np.testing.assert_allclose(modes / (2 * math.pi), [0.0, 0.25, 0.5])
    assert cavity_linewidth(LOW_Q) == pytest.approx(-math.log(0.9) / 2)
    assert cavity_linewidth(LOW_Q.with_(r=0.0)) == math.inf
    assert sharp_cavity(HIGH_Q) and not sharp_cavity(LOW_Q)


def test_modulus_minima_recovers_complex_zero():
    q = np.linspace(-1, 1, 2001)
    z0 = 0.123 - 0.01j
    (pos, width), = modulus_minima(q, np.abs(q - z0) ** 2)
    assert pos == pytest.approx(0.123, abs=1e-9)
    assert width == pytest.approx(0.01, rel=1e-6)


def test_high_q_polaritons_are_zeros_of_m22():
    w0 = HIGH_Q.omega_int
    poles = system_poles(HIGH_Q, w0 - 0.2, w0 + 0.2)
    positions = sorted(q / (2 * math.pi) for q, _ in poles)
    assert positions[0] == pytest.approx(0.98738, abs=2e-5)
    assert positions[-1] == pytest.approx(1.01262, abs=2e-5)
    for q, w in poles:
        m22 = system_transfer(np.array([complex(q, -w)]), HIGH_Q, scaled=True).m22
        assert abs(m22[0]) < 1e-8


def test_exact_solution_without_mirrors_is_bare_emitter():
    params = LOW_Q.with_(r=0.0)
    ctx = shell_context(energy(0.322), params)
    ex = exact_transmitted(ctx, params)
    ref = direct_emitter_spectrum(ctx, params)
    phase = ref.delta_amp / ex.delta_amp
    assert abs(phase) == pytest.approx(1.0, abs=1e-10)
    y = np.linspace(-0.2, 0.2, 21) + 0.001
    np.testing.assert_allclose(phase * ex.background_values(y + 0j), ref.background_values(y + 0j),
                               rtol=1e-7, atol=1e-10)
