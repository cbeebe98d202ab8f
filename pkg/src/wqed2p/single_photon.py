"""Single-photon amplitudes and 2x2 transfer matrices.

A transfer matrix maps the (right-moving, left-moving) amplitudes on the
left of an element to those on its right. With this orientation a
scatterer with symmetric amplitudes (t, r) has the matrix
[[t - r^2/t, r/t], [-r/t, 1/t]]. All momenta here are angular (c = l = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_model import PhysicalParams


@dataclass(frozen=True)
class Transfer2:
    """Transfer matrix with (possibly array-valued) entries."""

    m11: object
    m12: object
    m21: object
    m22: object

    def __matmul__(self, other: "Transfer2") -> "Transfer2":
        return Transfer2(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)

    def scattering(self) -> "Scattering":
        """Convert to scattering amplitudes (undefined where m22 = 0)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            t_right = 1.0 / self.m22
            return Scattering(
                t_left=self.det() / self.m22,
                r_left=-self.m21 / self.m22,
                t_right=t_right,
                r_right=self.m12 / self.m22,
            )


@dataclass(frozen=True)
class Scattering:
    """Scattering amplitudes for incidence from the left and from the right."""

    t_left: object
    r_left: object
    t_right: object
    r_right: object

    def transfer(self) -> Transfer2:
        """Inverse of :meth:`Transfer2.scattering`."""
        m22 = 1.0 / self.t_right
        return Transfer2(
            self.t_left - self.r_left * self.r_right / self.t_right,
            self.r_right * m22,
            -self.r_left * m22,
            m22,
        )


def symmetric_transfer(t, r) -> Transfer2:
    """Transfer matrix of a scatterer with equal amplitudes from both sides."""
    t = np.asarray(t, dtype=complex)
    r = np.asarray(r, dtype=complex)
    return Transfer2(t - r * r / t, r / t, -r / t, 1.0 / t)


def emitter_amplitudes(k, params: PhysicalParams):
    """Transmission and reflection amplitudes of the bare two-level emitter.

    Uses t = (k - Omega) / (k - Omega + i Gamma/2) and r = t - 1, so the
    total (power) linewidth is Gamma and the two-photon background carries
    Gamma as written in :mod:`wqed2p.emitter_block`.

    Args:
        k: Angular momentum (scalar or array).
        params: Physical parameters.

    Returns:
        Tuple (t_bar, r_bar).
    """
    k = np.asarray(k)
    if params.linewidth == 0.0:
        # Decoupled emitter: transparent at every k, including k = Omega.
        return np.ones(k.shape, dtype=complex), np.zeros(k.shape, dtype=complex)
    den = k - params.omega_int + 1j * params.linewidth
    return (k - params.omega_int) / den, -1j * params.linewidth / den


def mirror_transfer(params: PhysicalParams) -> Transfer2:
    """Single-photon transfer matrix of one mirror.

    Raises:
        ZeroDivisionError: For a perfectly reflecting mirror.
    """
    t = params.t_mirror
    if t == 0:
        raise ZeroDivisionError("perfect mirror (t = 0) has no transfer matrix")
    return symmetric_transfer(t, params.r)


def free_transfer(k, length: float) -> Transfer2:
    """Propagation over ``length``: diag(e^{ik l}, e^{-ik l})."""
    if length < 0:
        raise ValueError("length must be non-negative")
    ph = np.exp(1j * np.asarray(k) * length)
    return Transfer2(ph, np.zeros_like(ph), np.zeros_like(ph), 1.0 / ph)


def emitter_transfer_single(k, params: PhysicalParams) -> Transfer2:
    """Single-photon transfer matrix of the bare emitter."""
    t, r = emitter_amplitudes(k, params)
    return symmetric_transfer(t, r)


@dataclass(frozen=True)
class SystemAmplitudes:
    """Whole-system single-photon amplitudes.

    Attributes:
        t: Transmission amplitude (same from both sides by symmetry).
        r: Reflection amplitude for incidence from the right.
        r_left: Reflection amplitude for incidence from the left.
        singular: Boolean mask where m22 vanished; amplitudes are NaN there.
    """

    t: object
    r: object
    r_left: object
    singular: object

    def __iter__(self):
        return iter((self.t, self.r))


def system_transfer(k, params: PhysicalParams, scaled: bool = False) -> Transfer2:
    """Mirror, free space, emitter, free space, mirror, composed.

    Args:
        k: Angular momentum.
        params: Physical parameters.
        scaled: Return the product times the emitter transmission t_bar.
            The emitter matrix has a 1/t_bar prefactor that diverges on
            resonance; the scaled product stays finite there and yields the
            same amplitudes.
    """
    m = mirror_transfer(params)
    f = free_transfer(k, params.half_length)
    if scaled:
        t, r = emitter_amplitudes(k, params)
        t = np.asarray(t, dtype=complex)
        r = np.asarray(r, dtype=complex)
        e = Transfer2(t * t - r * r, r, -r, np.ones_like(t))
    else:
        e = emitter_transfer_single(k, params)
    return m @ f @ e @ f @ m


def system_single(k, params: PhysicalParams) -> SystemAmplitudes:
    """Single-photon transmission and reflection of the whole system.

    Args:
        k: Angular momentum (scalar or array).
        params: Physical parameters.

    Returns:
        SystemAmplitudes; entries with m22 = 0 are NaN and flagged.
    """
    tm = system_transfer(k, params, scaled=True)
    tbar = np.asarray(emitter_amplitudes(k, params)[0], dtype=complex)
    m22 = np.asarray(tm.m22, dtype=complex)
    singular = m22 == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(singular, np.nan, m22)
        return SystemAmplitudes(tbar / safe, tm.m12 / safe, -tm.m21 / safe, singular)


def cavity_transmission(k, params: PhysicalParams):
    """Empty two-mirror cavity transmission (Fabry-Perot, mirror spacing 2l)."""
    k = np.asarray(k)
    t, r = params.t_mirror, params.r
    ph = np.exp(2j * k * params.half_length)
    return t * t * ph / (1.0 - r * r * ph * ph)


def reinjection_amplitudes(k, params: PhysicalParams):
    """Amplitudes for a photon released just inside a mirror, moving inward.

    Returns:
        Tuple (same_side, far_side): the amplitude to leave through the
        mirror it started at and through the opposite mirror, respectively.
        Both follow from the whole-system amplitudes, since a photon
        entering from outside first passes the mirror with amplitude t.
    """
    s = system_single(k, params)
    t = params.t_mirror
    return (s.r_left - params.r) / t, s.t / t
