"""Two-photon transport through a two-level emitter between two mirrors in a 1D waveguide.

Modules:
    core_model: parameters, units and shell coordinates.
    single_photon: transfer matrices and single-photon amplitudes.
    shell_operator_algebra: diagonal plus low-rank operators on the energy shell.
    emitter_block: the emitter's two-photon operators and their cavity dressing.
    system_pipeline: whole-system transfer block and the wave-packet sum.
    observables: t2(x), g2(x) and energy scans of g2(0).
    oracles: independent cross-checks.
    cli: command-line front end.
"""

__version__ = "0.1.0"

from .core_model import HIGH_Q, LOW_Q, PhysicalParams  # noqa: E402

__all__ = ["HIGH_Q", "LOW_Q", "PhysicalParams", "__version__"]
