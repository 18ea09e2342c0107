"""Reaction-diffusion simulation on polar grids with foliated Schwarz symmetry diagnostics."""

from .grid import Direction, Kind, PolarGrid, ScalarField, build_grid
from .solver import SolverConfig, Trajectory, simulate

__all__ = ["Direction", "Kind", "PolarGrid", "ScalarField", "SolverConfig", "Trajectory", "build_grid", "simulate"]
__version__ = "0.1.0"
