"""Tempered-stable-driven OU processes: exact simulation, closed-form
transition laws, and energy-derivative pricing."""

from tsou.kernels import BACKEND
from tsou.process import (NtsParams, OuNtsParams, PathGrid, StepDecomposition,
                          ou_cumulant, simulate_paths, step_decomposition,
                          transition_cgf, transition_lch,
                          transition_lch_oracle)
from tsou.rng import RngStream, TsLaw

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "NtsParams", "OuNtsParams", "PathGrid", "StepDecomposition",
    "RngStream", "TsLaw", "ou_cumulant", "simulate_paths",
    "step_decomposition", "transition_cgf", "transition_lch",
    "transition_lch_oracle", "__version__",
]
