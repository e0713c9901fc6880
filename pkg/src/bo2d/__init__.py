"""Pseudo-spectral solver, diagnostics and operator-estimate probes for the
two-dimensional Benjamin-Ono equation and the Shrira equation."""

from .config import InitialCondition, RunConfig, build_ic, parse_config, serialize
from .diagnostics import DiagnosticSeries, Recorder, energy, mass
from .evolution import SimState, StepperConfig, run, step_ifrk4
from .model import EquationSpec, Model, TransverseSign, dispersion
from .spectral import RealField, SpectralField, SpectralGrid

__version__ = "0.1.0"

__all__ = [
    "DiagnosticSeries", "EquationSpec", "InitialCondition", "Model", "RealField", "Recorder",
    "RunConfig", "SimState", "SpectralField", "SpectralGrid", "StepperConfig", "TransverseSign",
    "build_ic", "dispersion", "energy", "mass", "parse_config", "run", "serialize", "step_ifrk4",
]
