import numpy as np
import pytest

from resetfda import (CoefMatrix, FunctionalPCA, design_matrix, eval_mean,
                      eval_weight, explained_variance, fit_fpca, gram_matrix,
                      reconstruct)
from resetfda.fpca import eval_covariance


@pytest.fixture
def gram(small_basis):
    return gram_matrix(small_basis)


def random_coefs(spec, n, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return CoefMatrix(A=rng.normal(0.0, scale, (n, spec.dimension)), spec=spec)


def rank1_family(spec, gram, n=40, seed=1):
    """mean + c_i * f with f normalized in the Gram metric."""
    rng = np.random.default_rng(seed)
    mean = rng.normal(size=spec.dimension)
    f = rng.normal(size=spec.dimension)
    f = f / np.sqrt(f @ gram.matrix @ f)
    c = rng.normal(0.0, 2.0, n)
    return CoefMatrix(A=mean + c[:, None] * f[None, :], spec=spec), f, c


class TestFitFpca:
    def test_identical_curves_zero_variance(self, small_basis, gram):
        row = np.linspace(0.0, 1.0, small_basis.dimension)
        coefs = CoefMatrix(A=np.tile(row, (6, 1)), spec=small_basis)
        model = fit_fpca(coefs, gram, q_max=4)
        assert np.allclose(model.eigenvalues, 0.0, atol=1e-15)
        assert np.allclose(model.scores, 0.0, atol=1e-12)
        assert np.allclose(model.mean_coefs, row)

    def test_rank1_family(self, small_basis, gram):
        coefs, f, c = rank1_family(small_basis, gram)
        model = fit_fpca(coefs, gram, q_max=4)
        table = explained_variance(model, 4)
        assert table.percentages[0] == pytest.approx(100.0, abs=1e-10)
        assert np.allclose(table.percentages[1:], 0.0, atol=1e-10)
        # scores proportional to the centered generating coefficients
        centered = c - c.mean()
        corr = np.corrcoef(model.scores[:, 0], centered)[0, 1]
        assert abs(corr) == pytest.approx(1.0, abs=1e-10)

    def test_grid_pca_oracle(self, cubic17):
        # oracle: classical PCA of the curves discretized on a fine grid
        g = gram_matrix(cubic17)
        coefs = random_coefs(cubic17, n=50, seed=3)
        model = fit_fpca(coefs, g, q_max=4)
        proportions = model.eigenvalues / model.total_variance

        u = np.linspace(0.0, 1.0, 1000)
        grid_values = coefs.A @ design_matrix(cubic17, u).T
        centered = grid_values - grid_values.mean(axis=0)
        vals = np.linalg.eigvalsh(centered.T @ centered)[::-1]
        grid_proportions = vals[:4] / vals.sum()
        assert np.allclose(proportions, grid_proportions, atol=1e-3)

    def test_weight_rows_gram_orthonormal(self, small_basis, gram):
        model = fit_fpca(random_coefs(small_basis, 30, seed=4), gram, q_max=4)
        b = model.weight_coefs
        assert np.allclose(b @ gram.matrix @ b.T, np.eye(4), atol=1e-8)

    def test_scores_centered_uncorrelated(self, small_basis, gram):
        model = fit_fpca(random_coefs(small_basis, 60, seed=5), gram, q_max=4)
        assert np.allclose(model.scores.mean(axis=0), 0.0, atol=1e-10)
        cov = model.scores.T @ model.scores / (model.scores.shape[0] - 1)
        assert np.allclose(cov, np.diag(model.eigenvalues), atol=1e-8)

    def test_total_variance_is_gram_weighted_trace(self, small_basis, gram):
        coefs = random_coefs(small_basis, 25, seed=6)
        model = fit_fpca(coefs, gram, q_max=4)
        centered = coefs.A - coefs.A.mean(axis=0)
        cov = centered.T @ centered / (coefs.n - 1)
        assert model.total_variance == pytest.approx(
            np.trace(gram.matrix @ cov), abs=1e-8)

    def test_sign_deterministic_and_nonneg_integral(self, small_basis, gram):
        from resetfda.bspline import basis_integrals
        coefs = random_coefs(small_basis, 30, seed=7)
        a = fit_fpca(coefs, gram, q_max=4)
        b = fit_fpca(coefs, gram, q_max=4)
        assert np.array_equal(a.weight_coefs, b.weight_coefs)
        assert np.array_equal(a.scores, b.scores)
        ints = basis_integrals(small_basis)
        assert np.all(a.weight_coefs @ ints >= 0)

    def test_q_max_out_of_range(self, small_basis, gram):
        coefs = random_coefs(small_basis, 5, seed=8)
        with pytest.raises(ValueError):
            fit_fpca(coefs, gram, q_max=5)    # n-1 = 4

    def test_truncation_beats_random_directions(self, small_basis, gram):
        # q=1 reconstruction error is minimal among unit directions
        rng = np.random.default_rng(9)
        f1 = rng.normal(size=small_basis.dimension)
        f2 = rng.normal(size=small_basis.dimension)
        A = (rng.normal(0, 2.0, (50, 1)) * f1[None, :]
             + rng.normal(0, 0.5, (50, 1)) * f2[None, :])
        coefs = CoefMatrix(A=A, spec=small_basis)
        model = fit_fpca(coefs, gram, q_max=4)

        centered = A - A.mean(axis=0)
        whitened = centered @ gram.sqrt
        total = np.sum(whitened ** 2)

        def rss_along(direction):
            d = direction / np.linalg.norm(direction)
            return total - np.sum((whitened @ d) ** 2)

        pc1 = gram.sqrt @ model.weight_coefs[0]
        best = rss_along(pc1)
        for _ in range(100):
            assert best <= rss_along(rng.normal(size=small_basis.dimension)) + 1e-10


class TestExplainedVariance:
    def test_rank1_is_all_first_component(self, small_basis, gram):
        coefs, *_ = rank1_family(small_basis, gram)
        table = explained_variance(fit_fpca(coefs, gram, q_max=3), 3)
        assert np.allclose(table.percentages, [100.0, 0.0, 0.0], atol=1e-8)

    def test_cumulative_non_decreasing(self, small_basis, gram):
        model = fit_fpca(random_coefs(small_basis, 40, seed=10), gram, q_max=4)
        table = explained_variance(model, 4)
        assert np.all(np.diff(table.cumulative) >= 0)
        assert table.cumulative[-1] <= 100.0 + 1e-9

    def test_q_out_of_range(self, small_basis, gram):
        model = fit_fpca(random_coefs(small_basis, 10, seed=11), gram, q_max=2)
        with pytest.raises(ValueError):
            explained_variance(model, 3)


class TestReconstruct:
    def test_q0_gives_mean(self, small_basis, gram):
        model = fit_fpca(random_coefs(small_basis, 20, seed=12), gram, q_max=3)
        assert np.array_equal(reconstruct(model, np.empty(0), 0), model.mean_coefs)

    def test_full_rank_reproduces_curves(self, small_basis, gram):
        # rank-3 family, q_max=4 >= rank: reconstruction is exact
        rng = np.random.default_rng(13)
        basis_dirs = rng.normal(size=(3, small_basis.dimension))
        A = rng.normal(size=(12, 3)) @ basis_dirs + rng.normal(size=small_basis.dimension)
        coefs = CoefMatrix(A=A, spec=small_basis)
        model = fit_fpca(coefs, gram, q_max=4)
        back = reconstruct(model, model.scores, 4)
        assert np.allclose(back, A, atol=1e-8)

    def test_score_length_mismatch(self, small_basis, gram):
        model = fit_fpca(random_coefs(small_basis, 10, seed=14), gram, q_max=3)
        with pytest.raises(ValueError):
            reconstruct(model, np.zeros(2), 3)


class TestEvaluation:
    def test_mean_of_identical_curves(self, small_basis, gram):
        row = np.linspace(1.0, 2.0, small_basis.dimension)
        coefs = CoefMatrix(A=np.tile(row, (4, 1)), spec=small_basis)
        model = fit_fpca(coefs, gram, q_max=2)
        for u in (0.0, 0.3, 1.0):
            expected = design_matrix(small_basis, [u])[0] @ row
            assert eval_mean(model, u) == pytest.approx(expected, abs=1e-12)

    def test_weight_functions_orthonormal_in_l2(self, small_basis, gram):
        from scipy.integrate import simpson
        model = fit_fpca(random_coefs(small_basis, 40, seed=15), gram, q_max=2)
        u = np.linspace(0.0, 1.0, 20001)
        f1 = eval_weight(model, 0, u)
        f2 = eval_weight(model, 1, u)
        assert simpson(f1 * f1, x=u) == pytest.approx(1.0, abs=1e-8)
        assert simpson(f1 * f2, x=u) == pytest.approx(0.0, abs=1e-8)

    def test_covariance_surface_consistency(self, small_basis, gram):
        coefs = random_coefs(small_basis, 30, seed=16)
        model = fit_fpca(coefs, gram, q_max=3)
        u, v = 0.3, 0.7
        assert eval_covariance(model, u, v) == pytest.approx(
            eval_covariance(model, v, u), abs=1e-12)
        # diagonal value equals the pointwise sample variance of the curves
        vals = design_matrix(small_basis, [u])[0] @ coefs.A.T
        assert eval_covariance(model, u, u) == pytest.approx(
            vals.var(ddof=1), abs=1e-10)

    def test_domain_check(self, small_basis, gram):
        model = fit_fpca(random_coefs(small_basis, 10, seed=17), gram, q_max=2)
        with pytest.raises(ValueError):
            eval_mean(model, 1.2)


class TestFunctionalPcaEstimator:
    def test_transform_matches_scores(self, small_basis):
        coefs = random_coefs(small_basis, 30, seed=18)
        est = FunctionalPCA(q_max=3).fit(coefs)
        assert np.allclose(est.transform(coefs), est.model_.scores, atol=1e-8)

    def test_inverse_transform_round_trip(self, small_basis):
        rng = np.random.default_rng(19)
        dirs = rng.normal(size=(2, small_basis.dimension))
        A = rng.normal(size=(15, 2)) @ dirs
        coefs = CoefMatrix(A=A, spec=small_basis)
        est = FunctionalPCA(q_max=3).fit(coefs)
        assert np.allclose(est.inverse_transform(est.transform(coefs)), A, atol=1e-8)
