"""Functional-data modeling of RRAM reset current-voltage variability.

Pipeline: register measured reset curves onto [0, 1], reconstruct them
by penalized B-spline smoothing, decompose the sample with functional
PCA, model the dominant score by a transformed Gumbel law, and sample
new curves from the fitted model.
"""

__version__ = "0.1.0"

from .bspline import (BasisSpec, GramMatrix, KnotVector, PenaltyMatrix,
                      design_matrix, diff_penalty, eval_basis, gram_matrix,
                      make_knots)
from .curves import (CurveRegistrar, RawCurve, RawDataset, RegisteredCurve,
                     load_dataset, register, save_dataset, unregister_eval)
from .distfit import (GumbelScoreModel, ScoreDistribution, candidate_fits,
                      fit_score_distribution, gumbel_cdf, gumbel_mle,
                      gumbel_pdf, gumbel_quantile, inverse_transform_scores,
                      ks_test, ks_test_bootstrap, sample_scores,
                      transform_scores)
from .errors import DataError, ModelFormatError, NumericError, ResetFdaError
from .fpca import (CoefMatrix, FpcaModel, FunctionalPCA, VarianceTable,
                   eval_mean, eval_weight, explained_variance, fit_fpca,
                   reconstruct)
from .psmooth import (LambdaSelection, PsplineFit, PsplineSmoother, fit_all,
                      fit_pspline, gcv_curve, loo_cv_curve, select_lambda)
from .simgen import GeneratorConfig, generate_curve, generate_dataset

__all__ = [name for name in dir() if not name.startswith("_")]
