"""Stationary cocycles over a shift realization whose partial sums converge
to alpha-stable Levy motions, with simulation and verification tools."""

__version__ = "0.1.0"

from . import stable_core, triangular_array, cocycle, process, verify  # noqa: E402,F401
