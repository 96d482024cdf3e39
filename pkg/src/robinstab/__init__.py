"""Boundary stabilization of a delayed reaction-diffusion equation with Robin conditions.

Pipeline: ``spectral`` (Sturm-Liouville eigenpairs) -> ``model`` (truncated
modal system) -> ``control`` (pole placement and rate certificates) ->
``sim`` (closed-loop delay simulation, finite-difference cross-check) ->
``iss`` (empirical ISS bound) and the ``cli`` harness.
"""

from .control import ControllerDesign, design_for_decay_rate, place_poles, synthesize
from .errors import NumericalError, RobinStabError, ValidationError
from .model import Actuation, TruncatedModel, build_model, select_mode_count
from .sim import Scenario, Trajectory, fd_oracle, paper_scenario, simulate
from .spectral import PlantParams, Spectrum, compute_spectrum, benchmark_params

__all__ = [
    "Actuation", "ControllerDesign", "NumericalError", "PlantParams", "RobinStabError",
    "Scenario", "Spectrum", "Trajectory", "TruncatedModel", "ValidationError",
    "build_model", "compute_spectrum", "design_for_decay_rate", "fd_oracle",
    "benchmark_params", "paper_scenario", "place_poles", "select_mode_count", "simulate",
    "synthesize",
]
