"""B-spline bases on a closed interval.

Uniformly extended knot vectors, pointwise basis evaluation, design
matrices, Gram matrices of basis inner products, and discrete
difference penalties.  The knot extension repeats the end spacing
(strictly increasing exterior knots) rather than clamping; with
equally spaced knots this makes the difference-penalty null space
consist of exact polynomials on the whole domain.  Everything here is
a pure function of its inputs; the returned objects are treated as
immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

__all__ = [
    "KnotVector",
    "BasisSpec",
    "GramMatrix",
    "PenaltyMatrix",
    "make_knots",
    "eval_basis",
    "design_matrix",
    "gram_matrix",
    "basis_integrals",
    "diff_penalty",
]


@dataclass(frozen=True)
class KnotVector:
    """Definition knots plus their uniform extension.

    ``interior`` holds the strictly increasing definition knots
    (endpoints included); ``extended`` continues the end spacing for
    ``degree`` extra knots on each side.
    """

    interior: np.ndarray
    degree: int
    extended: np.ndarray = field(init=False)

    def __post_init__(self):
        interior = np.asarray(self.interior, dtype=float)
        if interior.ndim != 1 or interior.size < 2:
            raise ValueError("need at least two definition knots")
        if np.any(np.diff(interior) <= 0):
            raise ValueError("definition knots must be strictly increasing")
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        left_step = interior[1] - interior[0]
        right_step = interior[-1] - interior[-2]
        extended = np.concatenate([
            interior[0] - left_step * np.arange(self.degree, 0, -1),
            interior,
            interior[-1] + right_step * np.arange(1, self.degree + 1),
        ])
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "extended", extended)

    @property
    def n_spans(self) -> int:
        return self.interior.size - 1


@dataclass(frozen=True)
class BasisSpec:
    """A clamped B-spline basis: knots, degree, and dimension."""

    knots: KnotVector

    @property
    def degree(self) -> int:
        return self.knots.degree

    @property
    def dimension(self) -> int:
        # one basis function per interior span plus degree
        return self.knots.n_spans + self.knots.degree

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots.interior[0]), float(self.knots.interior[-1])


@dataclass(frozen=True)
class GramMatrix:
    """Pairwise basis inner products, with symmetric square roots."""

    matrix: np.ndarray
    sqrt: np.ndarray
    inv_sqrt: np.ndarray


@dataclass(frozen=True)
class PenaltyMatrix:
    """Crossproduct of the d-order difference operator."""

    order: int
    matrix: np.ndarray


def make_knots(domain: tuple[float, float] = (0.0, 1.0),
               n_interior: int = 17,
               degree: int = 3) -> KnotVector:
    """Equally spaced definition knots spanning ``domain``."""
    a, b = float(domain[0]), float(domain[1])
    if not b - a > 0:
        raise ValueError(f"domain has non-positive length: [{a}, {b}]")
    if n_interior < 2:
        raise ValueError("need at least 2 definition knots")
    return KnotVector(interior=np.linspace(a, b, n_interior), degree=degree)


def _find_spans(spec: BasisSpec, u: np.ndarray) -> np.ndarray:
    """Index i into the extended knots with t[i] <= u < t[i+1].

    Half-open spans; the last span is closed so the right endpoint
    evaluates.
    """
    knots = spec.knots.interior
    idx = np.searchsorted(knots, u, side="right") - 1
    idx = np.clip(idx, 0, spec.knots.n_spans - 1)
    return idx + spec.degree


def design_matrix(spec: BasisSpec, points) -> np.ndarray:
    """Rows of basis values at each point (k x p, banded).

    Vectorized Cox-de Boor recursion: for every point only the
    degree+1 basis functions active on its span are computed, then
    scattered into the dense row.
    """
    u = np.atleast_1d(np.asarray(points, dtype=float))
    a, b = spec.domain
    if np.any(u < a) or np.any(u > b):
        bad = u[(u < a) | (u > b)][0]
        raise ValueError(f"point {bad} outside domain [{a}, {b}]")

    t = spec.knots.extended
    k = spec.degree
    span = _find_spans(spec, u)
    npts = u.size

    # triangular recurrence over the k+1 active functions per point
    vals = np.zeros((npts, k + 1))
    vals[:, 0] = 1.0
    left = np.zeros((npts, k + 1))
    right = np.zeros((npts, k + 1))
    for j in range(1, k + 1):
        left[:, j] = u - t[span + 1 - j]
        right[:, j] = t[span + j] - u
        saved = np.zeros(npts)
        for r in range(j):
            tmp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
            vals[:, r] = saved + right[:, r + 1] * tmp
            saved = left[:, j - r] * tmp
        vals[:, j] = saved

    out = np.zeros((npts, spec.dimension))
    cols = span[:, None] - k + np.arange(k + 1)[None, :]
    np.put_along_axis(out, cols, vals, axis=1)
    return out


def eval_basis(spec: BasisSpec, u: float) -> np.ndarray:
    """Basis values at a single point (length p)."""
    return design_matrix(spec, [u])[0]


def _span_quadrature(spec: BasisSpec, order: int):
    """Gauss-Legendre nodes and weights mapped onto every knot span."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    lo = spec.knots.interior[:-1]
    hi = spec.knots.interior[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def gram_matrix(spec: BasisSpec, eig_floor: float = 1e-12) -> GramMatrix:
    """Inner products of all basis pairs, by exact per-span quadrature.

    degree+1 Gauss points per span integrate the degree-2p polynomial
    integrand exactly.  The symmetric square root comes from an
    eigendecomposition; an eigenvalue below ``eig_floor`` times the
    largest one is treated as singular.
    """
    x, w = _span_quadrature(spec, spec.degree + 1)
    phi = design_matrix(spec, x)
    psi = phi.T @ (w[:, None] * phi)
    psi = 0.5 * (psi + psi.T)

    vals, vecs = np.linalg.eigh(psi)
    if vals[0] < eig_floor * vals[-1]:
        raise NumericError(
            f"Gram matrix numerically singular: eigenvalue ratio "
            f"{vals[0] / vals[-1]:.3e}")
    root = (vecs * np.sqrt(vals)) @ vecs.T
    inv_root = (vecs / np.sqrt(vals)) @ vecs.T
    return GramMatrix(matrix=psi, sqrt=root, inv_sqrt=inv_root)


def basis_integrals(spec: BasisSpec) -> np.ndarray:
    """Integral of each basis function over the domain (length p)."""
    x, w = _span_quadrature(spec, spec.degree + 1)
    return design_matrix(spec, x).T @ w


def diff_penalty(p: int, d: int) -> PenaltyMatrix:
    """d-order difference penalty on p coefficients: (D^d)' D^d."""
    if not 0 < d < p:
        raise ValueError(f"difference order must satisfy 0 < d < p, got d={d}, p={p}")
    diff = np.diff(np.eye(p), n=d, axis=0)
    return PenaltyMatrix(order=d, matrix=diff.T @ diff)
