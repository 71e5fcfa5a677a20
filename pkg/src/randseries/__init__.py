"""Convergence criteria and maximal inequalities for series of dependent random variables.

The terms are ``X_n = sum_{k<=n} a[n,k] Z_k`` with independent symmetric
unit-variance innovations ``Z_k``.  The package evaluates the diagonal ℓ²
criterion of the coefficient matrix, computes the maximal-inequality bounds,
factors covariances into triangular coefficient matrices and checks every
inequality by exhaustive enumeration or seeded Monte Carlo.
"""

from .adaptive import (DoobReport, MartingaleReport, PredictableRule, clamp_rule,
                       constant_rule, doob_check, expected_square_criterion, martingale_bound,
                       realize_coefficients, sign_rule, simulate_predictable, zero_rule)
from .coeffs import (LAWS, CoefficientMatrix, DiagonalProfile, TailReport, TruncationError,
                     VectorWeights, absolute_sum, collinear_matrix, column_sums, criterion_sum,
                     diagonal, diagonal_matrix, diagonal_profile, levy_bound, ones_matrix,
                     power_decay_matrix, shift_mask, tail_A, tail_B, tail_report,
                     weighted_criterion_sum, zero_matrix)
from .covfactor import (CovarianceSpec, FactorizationError, FactorizationReport,
                        cholesky_factor, cholesky_lower, fgn0_coefficients, fgn_covariance,
                        normalize_column_signs, verify_factorization)
from .estimators import DiagonalCriterion, PartialSumTransformer, TriangularFactorizer
from .formats import (FormatError, format_covmat, format_trimat, format_vecs, load_covariance,
                      load_matrix, load_rule, load_weights, parse_covmat, parse_trimat,
                      parse_vecs, random_matrix)
from .innovations import (EnumerationCapError, InnovationSpec, SignPattern,
                          enumerate_rademacher, enumeration_cap, generator, run_replicas,
                          sample_innovations)
from .simulate import (BoundCheck, McEstimate, SeriesPath, build_path, exact_expected_sup,
                       exact_tail_sup, mc_expected_sup, prefix_decomposition, sup_samples,
                       tail_sup_estimate, verify_levy, verify_tail)
from .stoptime import (MomentRatio, StoppingCheck, StoppingRecord, final_values,
                       first_crossing, fourth_moment_ratio, l2_cauchy_exact, l2_cauchy_profile,
                       max_fourth_moment_ratio, verify_stopping_inequality)

__version__ = "0.1.0"
