"""Cross-validation error as training error plus model instability.

Linear-regression and instance-based learners with analytic instability,
selection by the cross-validation criterion, and simulation checks of the
underlying expectations.
"""
from .blackbox import BlackBox, NoiseSpec, average_outputs, generate_outputs, parse_blackbox, replicate_outputs
from .data import DataError, Dataset, four_point_example, read_csv, write_csv
from .estimate import (
    ErrorDecomposition,
    IblSpec,
    LinearSpec,
    SelectionReport,
    decompose,
    estimate_sigma_sq_residual,
    monte_carlo_instability,
    parse_model_spec,
    select_model,
)
from .ibl import IblModel, analytic_instability_sq_ibl, cvc_ibl, reduce_instances, similarity
from .linalg import RankDeficiencyError, gram_schmidt, projection_matrix, solve_normal_equations
from .linreg import LinearModel, aic_linear, analytic_instability_sq, cvc, fit, polynomial_design_matrix

__version__ = "0.1.0"
