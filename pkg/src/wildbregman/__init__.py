"""Wild refitting under Bregman losses.

Residue symmetrization, wild refitting, wild-optimism computation, radius
and noise-scale calibration, and high-probability excess-risk certificates
in fixed and random design, plus a synthetic-oracle validation harness.
"""

from .certify import (RiskCertificate, StabilityConstants,
                      dagger_optimism_oracle, fixed_design_certificate,
                      oracle_excess_decomposition, random_design_certificate,
                      random_design_tail, stability_constants,
                      true_optimism_oracle)
from .complexity import (RadiusReport, ball_sup, convex_class_bracket,
                         deviation_term, fixed_point_radius,
                         pilot_error_oracle, pilot_sup, rhat_bound_convex, wn,
                         wn_tilde_oracle, zn_eps_oracle)
from .design import (FixedDesignDataset, PredictionMatrix, SignMatrix,
                     empirical_discrepancy, load_dataset, sample_sign_matrix,
                     save_dataset)
from .errors import (CalibrationError, ConvergenceError, RejectedInputError,
                     UnboundedRadiusError, UnsupportedConfigurationError)
from .geometry import Box, ClippedSimplex
from .harness import (CoverageExperiment, CoverageReport, OracleContext,
                      SyntheticSpec, generate_synthetic, realized_excess_risk,
                      run_coverage)
from .potentials import BregmanLoss, Potential, builtin_loss, builtin_potential
from .trainers import (LinearPredictor, LinearTrainer, SaturatedTrainer,
                       check_nonexpansive, fit_linear_class, fit_saturated)
from .wildfit import WildRefitResult, calibrate_rho, wild_optimism, wild_refit

__version__ = "0.1.0"

__all__ = [
    "Box", "BregmanLoss", "CalibrationError", "ClippedSimplex",
    "ConvergenceError", "CoverageExperiment", "CoverageReport",
    "FixedDesignDataset", "LinearPredictor", "LinearTrainer", "OracleContext",
    "Potential", "PredictionMatrix", "RadiusReport", "RejectedInputError",
    "RiskCertificate", "SaturatedTrainer", "SignMatrix", "StabilityConstants",
    "SyntheticSpec", "UnboundedRadiusError", "UnsupportedConfigurationError",
    "WildRefitResult", "ball_sup", "builtin_loss", "builtin_potential",
    "calibrate_rho", "check_nonexpansive", "convex_class_bracket",
    "dagger_optimism_oracle", "deviation_term", "empirical_discrepancy",
    "fit_linear_class", "fit_saturated", "fixed_design_certificate",
    "fixed_point_radius", "generate_synthetic", "load_dataset",
    "oracle_excess_decomposition", "pilot_error_oracle", "pilot_sup",
    "random_design_certificate", "random_design_tail", "realized_excess_risk",
    "rhat_bound_convex", "run_coverage", "sample_sign_matrix", "save_dataset",
    "stability_constants", "true_optimism_oracle", "wild_optimism",
    "wild_refit", "wn", "wn_tilde_oracle", "zn_eps_oracle",
]
