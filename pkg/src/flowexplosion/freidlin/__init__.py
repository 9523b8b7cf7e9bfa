"""Effective one-dimensional problem for strong cellular flows."""

from .cells import CellError, CellSpec, cell_territory, detect_cells, skeleton_mask
from .coefficients import CoefficientError, LevelCoefficients, level_coefficients
from .effective import (
    FreidlinResult,
    MultiCellResult,
    apply_operator,
    freidlin_lambda_star,
    freidlin_linear_solve,
    freidlin_minimal_solution,
    green_matrix,
    multi_cell_threshold,
)
