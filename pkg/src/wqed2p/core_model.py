"""Physical parameters, unit conversion and shell coordinates.

User-facing values (reflectivity aside) are given in units of 2*pi*c/l, the
convention used for all figure parameters. Internally the code sets c = 1
and l = 1 and works with angular frequencies, so every frequency-like input
is multiplied by 2*pi once, at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """Raised for physically invalid parameter sets."""


def to_internal_units(value):
    """Convert a frequency given in units of 2*pi*c/l to angular units (c = l = 1)."""
    return value * TWO_PI


def from_internal_units(value):
    """Inverse of :func:`to_internal_units`."""
    return value / TWO_PI


def default_transmission(r: float) -> complex:
    """Mirror transmission amplitude i*sqrt(1 - r^2) for a lossless mirror."""
    return 1j * math.sqrt(max(0.0, 1.0 - r * r))


@dataclass(frozen=True)
class PhysicalParams:
    """Cavity, mirror and emitter parameters.

    Attributes:
        r: Real mirror reflection amplitude, 0 <= r < 1.
        gamma: Emitter-waveguide coupling Gamma in units of 2*pi*c/l.
        omega: Emitter transition frequency in units of 2*pi*c/l.
        t_mirror: Complex mirror transmission amplitude. ``None`` selects
            the lossless default i*sqrt(1 - r^2).
        half_length: Distance l from the emitter to each mirror; the unit of
            length, so it is normally 1.
    """

    r: float
    gamma: float
    omega: float
    t_mirror: complex | None = None
    half_length: float = 1.0

    def __post_init__(self):
        if self.t_mirror is None:
            object.__setattr__(self, "t_mirror", default_transmission(float(self.r)))
        object.__setattr__(self, "t_mirror", complex(self.t_mirror))

    @property
    def t(self) -> complex:
        """Mirror transmission amplitude."""
        return self.t_mirror

    @property
    def gamma_int(self) -> float:
        """Coupling Gamma in angular units."""
        return to_internal_units(self.gamma)

    @property
    def omega_int(self) -> float:
        """Transition frequency in angular units."""
        return to_internal_units(self.omega)

    @property
    def linewidth(self) -> float:
        """Amplitude decay rate Gamma/2 of the bare emitter, angular units."""
        return 0.5 * self.gamma_int

    def with_(self, **changes) -> "PhysicalParams":
        """Copy with fields replaced; resets t_mirror to the default when r changes."""
        if "r" in changes and "t_mirror" not in changes:
            changes["t_mirror"] = None
        return replace(self, **changes)


def validate(params: PhysicalParams, allow_zero_gamma: bool = False) -> PhysicalParams:
    """Check the invariants of a parameter set.

    Args:
        params: Parameters to check.
        allow_zero_gamma: Accept Gamma = 0 (decoupled emitter), which is
            useful for limit checks but excluded from normal runs.

    Returns:
        ``params`` unchanged.

    Raises:
        ParameterError: If any invariant is violated.
    """
    r = params.r
    if not (np.isfinite(r) and 0.0 <= r < 1.0):
        raise ParameterError(f"reflectivity r must lie in [0, 1), got {r!r}")
    if abs(r * r + abs(params.t_mirror) ** 2 - 1.0) > 1e-12:
        raise ParameterError("mirror is not lossless: r^2 + |t|^2 != 1")
    g = params.gamma
    if not np.isfinite(g) or g < 0.0 or (g == 0.0 and not allow_zero_gamma):
        raise ParameterError(f"gamma must be positive, got {g!r}")
    if not (np.isfinite(params.omega) and params.omega > 0.0):
        raise ParameterError(f"omega must be positive, got {params.omega!r}")
    if not (np.isfinite(params.half_length) and params.half_length > 0.0):
        raise ParameterError("half_length must be positive")
    return params


@dataclass(frozen=True)
class ShellCoordinates:
    """Momenta of a photon pair on the energy shell E = k + p.

    Attributes:
        total_energy: E.
        half_difference: Delta = (k - p) / 2 (scalar or array).
    """

    total_energy: float
    half_difference: object

    @property
    def k(self):
        return 0.5 * self.total_energy + np.asarray(self.half_difference)

    @property
    def p(self):
        return 0.5 * self.total_energy - np.asarray(self.half_difference)

    @classmethod
    def from_momenta(cls, k, p) -> "ShellCoordinates":
        return cls(k + p, 0.5 * (np.asarray(k) - np.asarray(p)))


LOW_Q = PhysicalParams(r=0.9, gamma=0.004, omega=0.325)
HIGH_Q = PhysicalParams(r=0.9996, gamma=0.002, omega=1.0)
