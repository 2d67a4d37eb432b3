"""Functional PCA of the basis-coefficient matrix.

The orthogonal decomposition of the registered process is computed as
multivariate PCA of the coefficient matrix whitened by the Gram square
root: eigenvectors of the coefficient-space covariance map back to
weight-function coefficients through the inverse Gram root, and the
whitened, centered rows project onto them as scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .bspline import BasisSpec, GramMatrix, basis_integrals, eval_basis, gram_matrix

__all__ = [
    "CoefMatrix",
    "FpcaModel",
    "VarianceTable",
    "fit_fpca",
    "explained_variance",
    "reconstruct",
    "eval_mean",
    "eval_weight",
    "eval_covariance",
    "FunctionalPCA",
]


@dataclass(frozen=True)
class CoefMatrix:
    """Per-curve basis coefficients: n rows, one per fitted curve."""

    A: np.ndarray
    spec: BasisSpec

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[1] != self.spec.dimension:
            raise ValueError(
                f"coefficient rows of length {A.shape[1]} do not match "
                f"basis dimension {self.spec.dimension}")
        if not np.all(np.isfinite(A)):
            raise ValueError("non-finite coefficients")
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class FpcaModel:
    """Truncated Karhunen-Loeve estimate of the registered process.

    Weight-function coefficient rows are Gram-orthonormal; score
    columns are centered and uncorrelated with variance equal to the
    matching eigenvalue (divisor n-1).
    """

    mean_coefs: np.ndarray
    eigenvalues: np.ndarray
    weight_coefs: np.ndarray      # q_max x p, row j = coefficients of component j
    scores: np.ndarray            # n x q_max
    total_variance: float
    coef_cov: np.ndarray          # p x p covariance of the coefficient rows
    gram: GramMatrix
    spec: BasisSpec

    @property
    def q_max(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class VarianceTable:
    """Percent of total variance per component, plus cumulative sums."""

    percentages: np.ndarray
    cumulative: np.ndarray


def fit_fpca(coefs: CoefMatrix, gram: GramMatrix, q_max: int = 4) -> FpcaModel:
    """Eigendecompose the whitened coefficient covariance.

    Centers the coefficient rows, whitens them by the Gram square
    root, and keeps the leading ``q_max`` eigenpairs.  Each weight
    function's sign is fixed so its integral over the domain is
    non-negative (value at the left endpoint breaks exact ties), which
    makes repeated fits bitwise identical.
    """
    n, p = coefs.A.shape
    if n < 2:
        raise ValueError("need at least two curves")
    if not 1 <= q_max <= min(n - 1, p):
        raise ValueError(f"q_max={q_max} outside [1, {min(n - 1, p)}]")

    mean_coefs = coefs.A.mean(axis=0)
    centered = coefs.A - mean_coefs
    whitened = centered @ gram.sqrt
    cov = whitened.T @ whitened / (n - 1)
    cov = 0.5 * (cov + cov.T)

    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:q_max]
    eigenvalues = np.maximum(vals[order], 0.0)
    directions = vecs[:, order]                  # p x q_max, columns u_j

    weight_coefs = (gram.inv_sqrt @ directions).T
    integrals = basis_integrals(coefs.spec)
    left_end = eval_basis(coefs.spec, coefs.spec.domain[0])
    flip = np.ones(q_max)
    for j in range(q_max):
        signal = weight_coefs[j] @ integrals
        if signal == 0.0:
            signal = weight_coefs[j] @ left_end
        if signal < 0:
            flip[j] = -1.0
    weight_coefs = weight_coefs * flip[:, None]
    scores = (whitened @ directions) * flip[None, :]

    return FpcaModel(
        mean_coefs=mean_coefs,
        eigenvalues=eigenvalues,
        weight_coefs=weight_coefs,
        scores=scores,
        total_variance=float(np.trace(cov)),
        coef_cov=centered.T @ centered / (n - 1),
        gram=gram,
        spec=coefs.spec,
    )


def explained_variance(model: FpcaModel, q: int | None = None) -> VarianceTable:
    """Percent of total process variance carried by the first q components."""
    q = model.q_max if q is None else q
    if not 0 <= q <= model.q_max:
        raise ValueError(f"q={q} outside [0, {model.q_max}]")
    pct = 100.0 * model.eigenvalues[:q] / model.total_variance
    return VarianceTable(percentages=pct, cumulative=np.cumsum(pct))


def reconstruct(model: FpcaModel, scores, q: int) -> np.ndarray:
    """Coefficients of the truncated expansion: mean + scores @ weights.

    ``scores`` is one length-q vector or an (n, q) matrix; the result
    has one coefficient row per score row.
    """
    if not 0 <= q <= model.q_max:
        raise ValueError(f"q={q} outside [0, {model.q_max}]")
    scores = np.asarray(scores, dtype=float)
    single = scores.ndim == 1
    scores = np.atleast_2d(scores)
    if scores.shape[1] != q:
        raise ValueError(f"expected {q} scores per row, got {scores.shape[1]}")
    out = model.mean_coefs + scores @ model.weight_coefs[:q]
    return out[0] if single else out


def eval_mean(model: FpcaModel, u) -> np.ndarray | float:
    """Sample mean function at registered argument(s) u."""
    from .bspline import design_matrix
    vals = design_matrix(model.spec, u) @ model.mean_coefs
    return float(vals[0]) if np.isscalar(u) else vals


def eval_weight(model: FpcaModel, component: int, u) -> np.ndarray | float:
    """Weight function of one component (0-based) at argument(s) u."""
    from .bspline import design_matrix
    if not 0 <= component < model.q_max:
        raise ValueError(f"component {component} outside [0, {model.q_max})")
    vals = design_matrix(model.spec, u) @ model.weight_coefs[component]
    return float(vals[0]) if np.isscalar(u) else vals


def eval_covariance(model: FpcaModel, u: float, v: float) -> float:
    """Sample covariance surface at (u, v), for diagnostics."""
    phi_u = eval_basis(model.spec, u)
    phi_v = eval_basis(model.spec, v)
    return float(phi_u @ model.coef_cov @ phi_v)


class FunctionalPCA(BaseEstimator, TransformerMixin):
    """Estimator facade over fit_fpca.

    ``transform`` projects coefficient rows onto the fitted weight
    functions (scores); ``inverse_transform`` rebuilds coefficient
    rows from scores.
    """

    def __init__(self, q_max: int = 4):
        self.q_max = q_max

    def fit(self, X: CoefMatrix, y=None):
        self.gram_ = gram_matrix(X.spec)
        self.model_ = fit_fpca(X, self.gram_, self.q_max)
        return self

    def transform(self, X: CoefMatrix) -> np.ndarray:
        model = self.model_
        centered = X.A - model.mean_coefs
        return centered @ self.gram_.matrix @ model.weight_coefs.T

    def inverse_transform(self, scores: np.ndarray) -> np.ndarray:
        scores = np.atleast_2d(np.asarray(scores, dtype=float))
        return reconstruct(self.model_, scores, scores.shape[1])
