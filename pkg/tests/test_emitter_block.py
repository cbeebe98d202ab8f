"""Two-photon operators of the bare emitter and their cavity dressing."""

import numpy as np
import pytest

from conftest import energy
from wqed2p import profiles as pf
from wqed2p.core_model import LOW_Q
from wqed2p.emitter_block import (SQRT2, background_B, build_emitter_operators, factorize_B, odd_channel_profiles,
                                  r_prime_squared, reduced_emitter)
from wqed2p.oracles import probe_spectrum
from wqed2p.shell_operator_algebra import add, apply, delta_spectrum, grid_apply, identity, invert
from wqed2p.single_photon import emitter_amplitudes
from wqed2p.system_pipeline import shell_context

E = energy(0.322)
G = LOW_Q.gamma_int


@pytest.fixture(scope="module")
def ctx():
    return shell_context(E, LOW_Q)


@pytest.fixture(scope="module")
def ops(ctx):
    return build_emitter_operators(ctx, LOW_Q)


def spectra(ctx, n=5, seed=0):
    rng = np.random.default_rng(seed)
    return [probe_spectrum(ctx, G, float(rng.uniform(0.05, 2.0)) * G) for _ in range(n)]


def assert_same(a, b, tol):
    z = np.linspace(-6 * G, 6 * G, 25) + 0.3 * G
    scale = max(abs(b.delta_amp), np.max(np.abs(b.background_values(z))))
    assert abs(a.delta_amp - b.delta_amp) / scale < tol
    assert np.max(np.abs(a.background_values(z) - b.background_values(z))) / scale < tol


def test_background_at_origin():
    a = E - 2 * LOW_Q.omega_int + 1j * G
    expected = (4j * G * G / np.pi) / a ** 3
    assert complex(background_B(E, 0.0, 0.0, LOW_Q)) == pytest.approx(expected, rel=1e-14)


def test_background_symmetries():
    x, y = 0.3 * G, -1.7 * G
    b = background_B(E, x, y, LOW_Q)
    assert background_B(E, y, x, LOW_Q) == pytest.approx(b, rel=1e-15)
    assert background_B(E, -x, y, LOW_Q) == pytest.approx(b, rel=1e-15)


def test_background_decays_as_inverse_square():
    big = np.array([1e3, 1e4]) * G
    vals = np.abs(background_B(E, 0.1 * G, big, LOW_Q))
    assert vals[0] / vals[1] == pytest.approx(100.0, rel=1e-4)


def test_factorization_reproduces_kernel():
    rng = np.random.default_rng(1)
    b0, b1, b2 = factorize_B(E, LOW_Q)
    d_in, d_out = rng.uniform(-20, 20, (2, 100)) * G
    prod = b0 * b1(d_in + 0j) * b2(d_out + 0j)
    np.testing.assert_allclose(prod, background_B(E, d_in, d_out, LOW_Q), rtol=1e-14)


def test_b0_on_two_photon_resonance():
    b0, _, _ = factorize_B(2 * LOW_Q.omega_int, LOW_Q)
    assert b0 == pytest.approx(-4 * G ** 3 / np.pi, rel=1e-14)


def test_sampled_kernel_has_rank_one():
    y = np.linspace(-30, 30, 201) * G
    k = background_B(E, y[None, :], y[:, None], LOW_Q)
    s = np.linalg.svd(k, compute_uv=False)
    assert s[1] / s[0] < 1e-10


def test_diagonals_closed_forms(ops):
    y = np.linspace(-25, 25, 100) * G + 0.01 * G
    tk, rk = emitter_amplitudes(E / 2 + y, LOW_Q)
    tp, rp = emitter_amplitudes(E / 2 - y, LOW_Q)
    z = y + 0j
    np.testing.assert_allclose(ops.T22.diag(z), tk * tp, rtol=1e-14)
    np.testing.assert_allclose(ops.R22.diag(z), rk * rp, rtol=1e-14)
    np.testing.assert_allclose(ops.T12.diag(z), (tk * rp + rk * tp) / 2, rtol=1e-14)
    np.testing.assert_allclose(ops.T11.diag(z), (tk * tp + rk * rp) / SQRT2, rtol=1e-14)


def test_kernel_weights(ops):
    b0, _, _ = factorize_B(E, LOW_Q)
    assert ops.T22.coef[0, 0] == pytest.approx(b0, rel=1e-15)
    assert ops.R22.coef[0, 0] == pytest.approx(b0, rel=1e-15)
    assert ops.T11.coef[0, 0] == pytest.approx(SQRT2 * b0, rel=1e-15)


def test_t21_is_sqrt2_t12(ctx, ops):
    for s in spectra(ctx, 3):
        assert_same(apply(ops.T21, s), apply(ops.T12, s).scaled(SQRT2), 1e-12)


def test_on_resonance_transmission_zero():
    params = LOW_Q
    E0 = 2 * params.omega_int
    ctx = shell_context(E0, params)
    ops = build_emitter_operators(ctx, params)
    assert abs(ops.T22.diag(np.array([0j]))[0]) < 1e-15


def test_t22_on_delta_matches_grid_oracle(ctx, ops):
    s = delta_spectrum(ctx, 0.4 * G)
    x = np.linspace(-50 * G, 50 * G, 4001)
    dense = grid_apply(ops.T22, s, 4001, 50 * G)
    out = apply(ops.T22, s)
    np.testing.assert_allclose(out.background_values(x + 0j), dense, rtol=1e-6, atol=0)


def test_decoupled_emitter_is_transparent():
    params = LOW_Q.with_(gamma=0.0)
    ctx = shell_context(E, params)
    ops = build_emitter_operators(ctx, params)
    s = probe_spectrum(ctx, G, 0.5 * G)
    assert_same(apply(ops.T22, s), s, 1e-15)
    out = apply(ops.R22, s)
    assert out.delta_amp == 0
    np.testing.assert_array_equal(out.background_values(np.array([0.1j, 0.3])), 0)


def test_no_mirror_reduces_to_bare(ctx):
    params = LOW_Q.with_(r=0.0)
    assert r_prime_squared(E, params) == 0
    red = reduced_emitter(shell_context(E, params), params)
    assert red.T is red.ops.T22
    assert red.R is red.ops.R22


def test_r_prime_squared():
    assert r_prime_squared(E, LOW_Q) == pytest.approx(SQRT2 * np.exp(2j * E) * 0.81, rel=1e-15)


def test_loop_inverse_round_trip(ctx):
    red = reduced_emitter(ctx, LOW_Q)
    loop = add(identity(ctx), red.ops.T11.scaled(-r_prime_squared(E, LOW_Q)))
    for s in spectra(ctx, 5, seed=3):
        assert_same(apply(loop, apply(red.loop_inverse, s)), s, 1e-8)


def test_transmission_minus_reflection_unchanged_by_dressing(ctx):
    red = reduced_emitter(ctx, LOW_Q)
    for s in spectra(ctx, 2):
        dressed = apply(red.T, s) + apply(red.R, s).scaled(-1.0)
        bare = apply(red.ops.T22, s) + apply(red.ops.R22, s).scaled(-1.0)
        assert_same(dressed, bare, 1e-10)


def test_odd_channel_shifts_diagonals_oppositely(ctx):
    even = reduced_emitter(ctx, LOW_Q)
    odd = reduced_emitter(ctx, LOW_Q, odd_channel=True)
    corr, _ = odd_channel_profiles(even.ops, E, LOW_Q)
    z = np.linspace(-5, 5, 11) * G + 0.2 * G + 0j
    np.testing.assert_allclose(odd.T.diag(z) - even.T.diag(z), corr(z), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(odd.R.diag(z) - even.R.diag(z), -corr(z), rtol=1e-12, atol=1e-15)
    # The correction is odd-squared, so it vanishes at Delta = 0.
    assert abs(corr(np.array([0j]))[0]) < 1e-15


def test_dressing_changes_coherent_amplitude(ctx):
    red = reduced_emitter(ctx, LOW_Q)
    s = delta_spectrum(ctx, 0.0)
    bare = apply(red.ops.T22, s).delta_amp
    dressed = apply(red.T, s).delta_amp
    assert np.isfinite(dressed)
    assert abs(dressed - bare) > 1e-3 * abs(bare)


def test_loop_inverse_is_inverse_operator(ctx):
    red = reduced_emitter(ctx, LOW_Q)
    loop = add(identity(ctx), red.ops.T11.scaled(-r_prime_squared(E, LOW_Q)))
    again = invert(loop)
    for s in spectra(ctx, 2, seed=5):
        assert_same(apply(again, s), apply(red.loop_inverse, s), 1e-12)
