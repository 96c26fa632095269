"""Gazeau-Klauder type coherent states for an electron in crossed electric
and magnetic fields, with numerical verification tools."""

from .model import Gauge, PhysicalParams, SpectrumMode, derive_params
from .specfun import ConvergenceError
from .states import (
    StateConfig,
    build_combined_cs,
    build_continuous_cs,
    build_discrete_cs,
    distance,
    evolve,
    overlap,
    time_evolve,
)
from .verify import VerificationReport, run_suite

__version__ = "0.1.0"
