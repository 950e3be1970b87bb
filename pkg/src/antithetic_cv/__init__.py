"""Cross-validation with antithetic Gaussian randomization.

Prediction-error estimators for Gaussian and exponential-family data that
replace sample splitting with correlated Gaussian noise, together with
the coupled bootstrap, SURE and classic K-fold baselines, simulation
scenarios, and an antithetic zeroth-order gradient estimator.
"""

from .errors import ContractViolation, LearnerFailure, SeparationError, UnsupportedOperation
from .estimators import (Method, NormalMeansData, RiskEstimate, cb_alpha, cv_alpha,
                         cv_alpha_replicates, cv_decomposition, expfam_cross_term, kfold_cv,
                         smoothed_divergence_mc, sure)
from .glm import (ExpFamilyModel, LogisticLearner, LogisticModel, ScalingFactor, cv_glm,
                  fit_logistic_irls, kfold_cv_logistic, logistic_model, oracle_pe_glm, plugin_H)
from .harness import (MethodSpec, MseReport, Scenario, ScenarioSpec, build_problem, gen_friedman1,
                      gen_isotonic, gen_logistic, oracle_pe, oracle_pe_normal, paired_gap,
                      run_mse_grid, write_csv)
from .predictors import (FunctionPredictor, IsotonicLearner, IsotonicPredictor, LinearSmoother,
                         SoftThreshold, isotonic_learner, pava, ridge_smoother,
                         soft_threshold_predictor)
from .rng import RngSpec
from .sampler import (AntitheticDraws, antithetic_normals, independent_normals, sample_antithetic,
                      sample_independent, scale_draws)
from .zeroth_order import GradEstimate, antithetic_grad

__version__ = "0.1.0"
