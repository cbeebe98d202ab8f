import math

import numpy as np
import pytest

from wqed2p.core_model import HIGH_Q, LOW_Q, PhysicalParams, TWO_PI
from wqed2p.single_photon import (Transfer2, cavity_transmission, emitter_amplitudes, free_transfer,
                                  mirror_transfer, reinjection_amplitudes, system_single, system_transfer)


def test_emitter_on_resonance_reflects():
    t, r = emitter_amplitudes(LOW_Q.omega_int, LOW_Q)
    assert abs(t) == 0
    assert r == pytest.approx(-1)


def test_emitter_unitarity_and_decoupling():
    k = LOW_Q.omega_int + 3 * LOW_Q.gamma_int
    t, r = emitter_amplitudes(k, LOW_Q)
    assert abs(abs(t) ** 2 + abs(r) ** 2 - 1) < 1e-14
    assert t == pytest.approx(1 + r)
    weak = LOW_Q.with_(gamma=1e-12)
    t, r = emitter_amplitudes(LOW_Q.omega_int + 0.1, weak)
    assert abs(t - 1) < 1e-9 and abs(r) < 1e-9


def test_mirror_transfer_entries():
    m = mirror_transfer(PhysicalParams(0.0, 0.004, 0.325))
    np.testing.assert_allclose(m.as_array(), [[1j, 0], [0, -1j]], atol=1e-15)
    m = mirror_transfer(LOW_Q)
    assert m.m22 == pytest.approx(1 / (1j * math.sqrt(0.19)))
    s = m.scattering()
    assert abs(abs(s.t_right) ** 2 + abs(s.r_right) ** 2 - 1) < 1e-14


def test_free_transfer():
    np.testing.assert_allclose(free_transfer(0.0, 1.0).as_array(), np.eye(2))
    np.testing.assert_allclose(free_transfer(1.3, 0.0).as_array(), np.eye(2))
    a = free_transfer(1.3, 0.4) @ free_transfer(1.3, 0.7)
    np.testing.assert_allclose(a.as_array(), free_transfer(1.3, 1.1).as_array(), atol=1e-14)


def test_transfer_scattering_round_trip():
    m = system_transfer(np.array(2.1), LOW_Q)
    back = m.scattering().transfer()
    np.testing.assert_allclose(back.as_array(), m.as_array(), rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("params", [LOW_Q, HIGH_Q])
def test_system_unitarity(params):
    k = TWO_PI * np.linspace(params.omega - 0.25, params.omega + 0.25, 10_000)
    amp = system_single(k, params)
    ok = ~amp.singular
    assert np.max(np.abs(np.abs(amp.t[ok]) ** 2 + np.abs(amp.r[ok]) ** 2 - 1)) < 1e-10
    assert np.max(np.abs(np.abs(amp.t[ok]) ** 2 + np.abs(amp.r_left[ok]) ** 2 - 1)) < 1e-10


def test_lossless_determinant():
    m = system_transfer(TWO_PI * np.linspace(0.2, 0.4, 11), LOW_Q)
    np.testing.assert_allclose(np.abs(m.det()), 1.0, rtol=1e-12)


def test_no_cavity_only_adds_phase():
    p = LOW_Q.with_(r=0.0)
    k = TWO_PI * np.linspace(0.3, 0.35, 101)
    np.testing.assert_allclose(np.abs(system_single(k, p).t), np.abs(emitter_amplitudes(k, p)[0]), atol=1e-14)


def test_decoupled_emitter_gives_fabry_perot():
    p = PhysicalParams(0.9, 0.0, 0.325)
    k = TWO_PI * np.linspace(0.2, 0.4, 201)
    np.testing.assert_allclose(system_single(k, p).t, cavity_transmission(k, p), atol=1e-13)


def test_singular_point_flagged():
    amp = system_single(np.array([HIGH_Q.omega_int]), HIGH_Q)
    assert abs(amp.t[0]) < 1e-12 or amp.singular[0]


def test_vacuum_rabi_doublet_high_q():
    k = TWO_PI * np.linspace(0.98, 1.02, 10_000)
    t2 = np.abs(system_single(k, HIGH_Q).t) ** 2
    peaks = np.nonzero((t2[1:-1] > t2[:-2]) & (t2[1:-1] > t2[2:]) & (t2[1:-1] > 0.5))[0] + 1
    pos = k[peaks] / TWO_PI
    assert len(pos) == 2
    assert pos[0] < 1.0 < pos[1]
    assert abs((pos[0] + pos[1]) / 2 - 1.0) < 1e-3


def test_fano_asymmetry_near_cavity_resonance():
    k = TWO_PI * np.linspace(LOW_Q.omega - 5 * LOW_Q.gamma, LOW_Q.omega + 5 * LOW_Q.gamma, 20001)
    t2 = np.abs(system_single(k, LOW_Q).t) ** 2
    assert t2.min() < 1e-3 and t2.max() > 0.99


def test_reinjection_amplitudes_empty_cavity():
    p = PhysicalParams(0.9, 0.0, 0.325)
    k = TWO_PI * np.linspace(0.3, 0.35, 51)
    same, far = reinjection_amplitudes(k, p)
    t, r = p.t_mirror, p.r
    loop = np.exp(4j * k * p.half_length)
    np.testing.assert_allclose(far, t * np.exp(2j * k * p.half_length) / (1 - r * r * loop), rtol=1e-12)
    np.testing.assert_allclose(same, t * r * loop / (1 - r * r * loop), rtol=1e-12)
