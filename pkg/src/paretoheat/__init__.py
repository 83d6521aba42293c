"""Pareto equilibria for bi-objective optimal control of heat equations on masked grids."""
from .admissible import Box as BoxSet, FullSpace, L2Ball
from .algorithms import SolveReport, SolverOptions, solve
from .config import ConfigError, ExperimentConfig, load_config, preset
from .functionals import CostPair, ProblemSpec, evaluate_costs, gradient, optimality_residual
from .grid import Ball, Box, SpatialGrid, TimeGrid, build_grid
from .models import Bilinear, Linear, Semilinear, sine_reaction, zero_reaction

__version__ = "0.1.0"
