"""Randomized sketching for strongly convex-concave saddle problems.

Sketch one side of the bilinear coupling with a subspace embedding,
re-solve with l1 regularization calibrated to the embedding error, and
recover the sparse half of the original saddle point with dimension-free
guarantees.  The package covers the model objects, a primal-dual solver,
projection sampling, regularization prescriptions with recovery bounds,
synthetic and ERM instance generators, and a sweep harness with
delimited and figure output.
"""

from .errors import (BudgetExceededError, ConfigError, DimensionError,
                     SketchSaddleError, UnsupportedProblemError)
from .harness import (BoundCheck, RateFit, SweepConfig, TrialRecord,
                      build_instance, check_bounds, fit_rate, median_by_m,
                      run_sweep, trial_seed)
from .instances import (ErmInstance, PerturbedInstance, PlantedInstance,
                        conjugate_grad, conjugate_prox, conjugate_value,
                        dual_from_primal,
                        gen_erm, gen_planted_quadratic, loss_derivative,
                        loss_value, make_conjugate, margins, normalize,
                        perturb_to_approx_sparse, reference_pair)
from .matio import (load_instance, read_matrix, read_projection, read_vector,
                    save_instance, write_matrix, write_projection,
                    write_vector)
from .model import (Box, ConvexFn, SaddleProblem, SolutionPair, SparsityStats,
                    col_norms, kkt_residual, row_norms, sparsity_stats,
                    support)
from .regbounds import (DEFAULT_C, THEOREMS, OracleQuantities, RecoveryBounds,
                        RegPrescription, RhoDiagnostics, minimum_sketch_size,
                        prescribe_regularization, recovery_bounds,
                        rho_diagnostics, theorem2_bound, theorem_shape,
                        zeta_restricted)
from .report import (emit_report, read_records_csv, render_figures,
                     write_medians_dat, write_records_csv)
from .sketch import (DISTRIBUTIONS, ProjectionMatrix, SketchedProblem,
                     apply_sketch, calibrate_c, inner_product_distortion,
                     jl_failure_rate, make_projection)
from .solver import (SolveReport, SolverOptions, composite_residual,
                     minimize_reg_linear, operator_norm,
                     operator_norm_factored, prox_quadratic_plus_l1,
                     prox_step, soft_threshold, solve_exact,
                     solve_exact_quadratic, solve_sketched)

__version__ = "0.1.0"

__all__ = [
    "BoundCheck", "Box", "BudgetExceededError", "ConfigError", "ConvexFn",
    "DEFAULT_C", "DISTRIBUTIONS", "DimensionError", "ErmInstance",
    "OracleQuantities", "PerturbedInstance", "PlantedInstance",
    "ProjectionMatrix", "RateFit", "RecoveryBounds", "RegPrescription",
    "RhoDiagnostics", "SaddleProblem", "SketchSaddleError", "SketchedProblem",
    "SolutionPair", "SolveReport", "SolverOptions", "SparsityStats",
    "SweepConfig", "THEOREMS", "TrialRecord", "UnsupportedProblemError",
    "apply_sketch",
    "build_instance", "calibrate_c", "check_bounds", "col_norms",
    "composite_residual", "conjugate_grad", "conjugate_prox",
    "conjugate_value",
    "dual_from_primal", "emit_report", "fit_rate", "gen_erm",
    "gen_planted_quadratic", "inner_product_distortion", "jl_failure_rate",
    "kkt_residual", "load_instance", "loss_derivative", "loss_value",
    "make_conjugate", "make_projection", "margins", "median_by_m",
    "minimize_reg_linear", "minimum_sketch_size", "normalize",
    "operator_norm", "operator_norm_factored", "perturb_to_approx_sparse",
    "prescribe_regularization", "prox_quadratic_plus_l1", "prox_step",
    "read_matrix", "read_projection", "read_records_csv", "read_vector",
    "recovery_bounds", "reference_pair", "render_figures",
    "rho_diagnostics", "row_norms",
    "run_sweep", "save_instance", "soft_threshold", "solve_exact",
    "solve_exact_quadratic", "solve_sketched", "sparsity_stats", "support",
    "theorem2_bound", "theorem_shape", "trial_seed", "write_matrix",
    "write_medians_dat",
    "write_projection", "write_records_csv", "write_vector",
    "zeta_restricted",
]
