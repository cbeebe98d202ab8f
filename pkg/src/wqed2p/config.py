"""Run configuration: key = value files, presets and command-line overrides.

A configuration file holds one ``key = value`` pair per line; ``#`` starts a
comment. Frequencies are in units of 2*pi*c/l and detector separations in
units of 1/Gamma. The presets shipped with the package reproduce the figure
parameter sets and can be named instead of a file path.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .core_model import ParameterError, PhysicalParams, validate

MODES = ("single", "t2", "g2", "scan-g20", "oracle-check")
PRESETS = ("fig3a", "fig3b", "fig3c", "fig4", "fig5")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def _floats(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _optional_float(text: str):
    return None if text.strip().lower() in ("", "none", "default") else float(text)


def _complex(text: str):
    text = text.strip().replace(" ", "")
    if text.lower() in ("", "none", "default"):
        return None
    return complex(text.replace("i", "j"))


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs besides the output directory.

    Attributes:
        name: Label copied into the manifest.
        r: Mirror reflectivity.
        gamma: Coupling Gamma (units 2 pi c / l).
        omega: Transition frequency Omega (units 2 pi c / l).
        t_mirror: Mirror transmission amplitude (default i sqrt(1 - r^2)).
        e_half: Pair energies E/2 for the t2 and g2 modes.
        delta0: Incident half-difference Delta0 (units 2 pi c / l).
        x_max: Largest detector separation (units 1/Gamma).
        x_step: Separation step (units 1/Gamma).
        k_min: First single-photon momentum (default Omega - 0.05).
        k_max: Last single-photon momentum (default Omega + 0.05).
        k_step: Single-photon momentum step.
        scan_start: First E/2 of a scan.
        scan_stop: Last E/2 of a scan (inclusive).
        scan_step: Scan step.
        rtol: Relative quadrature tolerance.
        seed: Seed for the random operators of the oracle check.
    """

    name: str = "custom"
    r: float = 0.9
    gamma: float = 0.004
    omega: float = 0.325
    t_mirror: complex | None = None
    e_half: tuple = (0.325,)
    delta0: float = 0.0
    x_max: float = 50.0
    x_step: float = 0.5
    k_min: float | None = None
    k_max: float | None = None
    k_step: float = 1e-4
    scan_start: float = 0.98
    scan_stop: float = 1.05
    scan_step: float = 2e-4
    rtol: float = 1e-10
    seed: int = 0
    _params: PhysicalParams = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            params = validate(PhysicalParams(self.r, self.gamma, self.omega, self.t_mirror))
        except (ParameterError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, "_params", params)

    @property
    def params(self) -> PhysicalParams:
        return self._params

    def x_grid(self) -> np.ndarray:
        """Symmetric separation grid -x_max .. x_max."""
        n = int(round(self.x_max / self.x_step))
        return self.x_step * np.arange(-n, n + 1)

    def k_grid(self) -> np.ndarray:
        lo = self.omega - 0.05 if self.k_min is None else self.k_min
        hi = self.omega + 0.05 if self.k_max is None else self.k_max
        return _inclusive_range(lo, hi, self.k_step)

    def scan_grid(self) -> np.ndarray:
        return _inclusive_range(self.scan_start, self.scan_stop, self.scan_step)

    def check(self, mode: str) -> "RunConfig":
        """Validate the settings needed by ``mode``.

        Raises:
            ConfigError: On any inconsistency.
        """
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
        if not (0.0 < self.rtol < 1e-2):
            raise ConfigError("rtol must lie in (0, 1e-2)")
        if mode in ("t2", "g2", "oracle-check"):
            if not (self.x_max > 0 and self.x_step > 0):
                raise ConfigError("x_max and x_step must be positive")
            if self.x_max / self.x_step > 20000:
                raise ConfigError("x grid too large (more than 40001 points)")
            if not self.e_half or any(e <= 0 for e in self.e_half):
                raise ConfigError("e_half must list positive energies")
        if mode == "single":
            if not self.k_step > 0:
                raise ConfigError("k_step must be positive")
            if self.k_grid().size == 0:
                raise ConfigError("empty momentum range")
        if mode == "scan-g20":
            if not self.scan_step > 0:
                raise ConfigError("scan_step must be positive")
            if self.scan_grid().size == 0:
                raise ConfigError("empty scan range")
            if self.scan_start <= 0:
                raise ConfigError("scan energies must be positive")
        return self

    def as_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            if isinstance(value, complex):
                value = [value.real, value.imag]
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        out["t_mirror"] = [self.params.t_mirror.real, self.params.t_mirror.imag]
        return out


def _inclusive_range(lo: float, hi: float, step: float) -> np.ndarray:
    if hi < lo:
        return np.zeros(0)
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


_PARSERS = {
    "name": str,
    "r": float,
    "gamma": float,
    "omega": float,
    "t_mirror": _complex,
    "e_half": _floats,
    "delta0": float,
    "x_max": float,
    "x_step": float,
    "k_min": _optional_float,
    "k_max": _optional_float,
    "k_step": float,
    "scan_start": float,
    "scan_stop": float,
    "scan_step": float,
    "rtol": float,
    "seed": int,
}


def parse_pairs(lines, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines into typed values.

    Raises:
        ConfigError: On unknown keys or malformed values.
    """
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = _convert(key, value, f"{source}:{lineno}")
    return values


def _convert(key: str, value: str, where: str):
    if key not in _PARSERS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return _PARSERS[key](value)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {exc}") from exc


def preset_text(name: str) -> str:
    """Contents of a shipped preset."""
    return resources.files("wqed2p").joinpath("presets", f"{name}.cfg").read_text()


def load_config(source: str, overrides=()) -> RunConfig:
    """Build a configuration from a file path or preset name plus overrides.

    Args:
        source: Path to a config file, or one of :data:`PRESETS`.
        overrides: ``key=value`` strings applied after the file.

    Raises:
        ConfigError: If the file is missing or any value is invalid.
    """
    if source in PRESETS:
        text = preset_text(source)
        label = f"preset {source}"
    else:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {source}")
        text = path.read_text()
        label = str(path)
    values = parse_pairs(text.splitlines(), label)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        values[key] = _convert(key, value, "--set")
    values.setdefault("name", source if source in PRESETS else Path(source).stem)
    return RunConfig(**values)
