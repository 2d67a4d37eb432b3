import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import simpson

from resetfda import (BasisSpec, NumericError, design_matrix, diff_penalty,
                      eval_basis, gram_matrix, make_knots)
from resetfda.bspline import basis_integrals


class TestMakeKnots:
    def test_paper_configuration(self):
        kv = make_knots((0.0, 1.0), 17, 3)
        assert np.allclose(kv.interior, np.arange(17) / 16)
        assert BasisSpec(kv).dimension == 19

    def test_single_span_indicator(self):
        spec = BasisSpec(make_knots((0.0, 1.0), 2, 0))
        assert spec.dimension == 1
        assert eval_basis(spec, 0.5) == pytest.approx([1.0])

    def test_equal_spacing_general_domain(self):
        kv = make_knots((0.0, 2.0), 5, 3)
        assert np.allclose(kv.interior, [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_degenerate_domain_rejected(self):
        with pytest.raises(ValueError):
            make_knots((1.0, 1.0), 5, 3)

    def test_too_few_knots_rejected(self):
        with pytest.raises(ValueError):
            make_knots((0.0, 1.0), 1, 3)

    def test_uniform_extension(self):
        kv = make_knots((0.0, 1.0), 5, 3)
        assert kv.extended.size == 5 + 2 * 3
        assert np.allclose(np.diff(kv.extended), 0.25)
        assert kv.extended[0] == -0.75 and kv.extended[-1] == 1.75


class TestEvalBasis:
    def test_interior_knot_cubic_values(self, cubic17):
        # hand-run of the recursion at a knot with uniform spacing
        vals = eval_basis(cubic17, 8 / 16)
        nonzero = vals[vals != 0]
        assert nonzero == pytest.approx([1 / 6, 4 / 6, 1 / 6], abs=1e-12)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_partition_of_unity(self, u):
        spec = BasisSpec(make_knots((0.0, 1.0), 17, 3))
        assert abs(eval_basis(spec, u).sum() - 1.0) <= 1e-12

    def test_local_support(self, cubic17):
        ext = cubic17.knots.extended
        for u in np.linspace(0.01, 0.99, 23):
            vals = eval_basis(cubic17, u)
            assert np.count_nonzero(vals) <= cubic17.degree + 1
            for j in np.flatnonzero(vals):
                assert ext[j] <= u <= ext[j + cubic17.degree + 1]

    def test_right_endpoint_evaluates(self, cubic17):
        vals = eval_basis(cubic17, 1.0)
        nonzero = vals[vals != 0]
        assert nonzero == pytest.approx([1 / 6, 4 / 6, 1 / 6], abs=1e-12)
        assert vals.sum() == pytest.approx(1.0, abs=1e-12)

    def test_outside_domain_rejected(self, cubic17):
        with pytest.raises(ValueError):
            eval_basis(cubic17, 1.0001)


class TestDesignMatrix:
    def test_single_point_matches_eval(self, cubic17):
        u = 0.37
        assert np.array_equal(design_matrix(cubic17, [u])[0], eval_basis(cubic17, u))

    def test_row_sums_one(self, cubic17):
        phi = design_matrix(cubic17, np.linspace(0, 1, 101))
        assert np.allclose(phi.sum(axis=1), 1.0, atol=1e-12)

    def test_millivolt_grid_shape(self, cubic17):
        # V_reset = 0.601 V at 1 mV steps: 601 registered sampling points
        k = 601
        phi = design_matrix(cubic17, np.arange(1, k + 1) / k)
        assert phi.shape == (601, 19)

    def test_bandwidth(self, cubic17):
        phi = design_matrix(cubic17, np.linspace(0, 1, 57))
        assert np.all(np.count_nonzero(phi, axis=1) <= cubic17.degree + 1)


class TestGramMatrix:
    def test_indicator_basis_diagonal(self):
        spec = BasisSpec(make_knots((0.0, 1.0), 3, 0))
        g = gram_matrix(spec)
        assert np.allclose(g.matrix, np.diag([0.5, 0.5]), atol=1e-15)

    def test_symmetric_positive_definite(self, cubic17):
        g = gram_matrix(cubic17)
        assert np.array_equal(g.matrix, g.matrix.T)
        assert np.linalg.eigvalsh(g.matrix)[0] > 0

    def test_sqrt_squares_back(self, cubic17):
        g = gram_matrix(cubic17)
        assert np.allclose(g.sqrt @ g.sqrt, g.matrix, atol=1e-14)
        assert np.allclose(g.inv_sqrt @ g.matrix @ g.inv_sqrt, np.eye(19), atol=1e-12)

    def test_against_brute_force_quadrature(self, cubic17):
        # oracle: Simpson on a dense grid, independent of the span quadrature
        u = np.linspace(0.0, 1.0, 100_001)
        phi = design_matrix(cubic17, u)
        brute = np.empty((19, 19))
        for i in range(19):
            brute[i] = simpson(phi[:, i][:, None] * phi, x=u, axis=0)
        assert np.max(np.abs(gram_matrix(cubic17).matrix - brute)) <= 1e-10

    def test_gram_consistency_random_coefficients(self, cubic17):
        rng = np.random.default_rng(5)
        g = gram_matrix(cubic17)
        u = np.linspace(0.0, 1.0, 20_001)
        phi = design_matrix(cubic17, u)
        for _ in range(5):
            a = rng.normal(size=19)
            b = rng.normal(size=19)
            numeric = simpson((phi @ a) * (phi @ b), x=u)
            assert a @ g.matrix @ b == pytest.approx(numeric, abs=1e-8)

    def test_basis_integrals_sum_to_domain_length(self, cubic17):
        assert basis_integrals(cubic17).sum() == pytest.approx(1.0, abs=1e-14)


class TestDiffPenalty:
    def test_first_order_example(self):
        expected = [[1, -1, 0], [-1, 2, -1], [0, -1, 1]]
        assert np.array_equal(diff_penalty(3, 1).matrix, expected)

    def test_second_difference_stencil(self):
        delta2 = np.diff(np.eye(4), n=2, axis=0)
        assert np.array_equal(delta2, [[1, -2, 1, 0], [0, 1, -2, 1]])
        assert np.array_equal(diff_penalty(4, 2).matrix, delta2.T @ delta2)

    @pytest.mark.parametrize("p,d", [(5, 1), (8, 2), (10, 3)])
    def test_annihilates_polynomial_sequences(self, p, d):
        i = np.arange(p, dtype=float)
        for power in range(d):
            assert np.allclose(diff_penalty(p, d).matrix @ i ** power, 0, atol=1e-10)

    @pytest.mark.parametrize("p,d", [(5, 1), (8, 2), (19, 2), (10, 3)])
    def test_null_space_dimension(self, p, d):
        vals = np.linalg.eigvalsh(diff_penalty(p, d).matrix)
        assert np.sum(vals < 1e-10) == d

    def test_order_bounds(self):
        with pytest.raises(ValueError):
            diff_penalty(3, 3)
        with pytest.raises(ValueError):
            diff_penalty(3, 0)


def test_collapsed_support_rejected():
    # nearly coincident knots drive the Gram matrix toward singularity
    kv = make_knots((0.0, 1.0), 4, 3)
    squeezed = kv.interior.copy()
    squeezed[1] = 1e-15
    squeezed[2] = 2e-15
    from resetfda import KnotVector
    with pytest.raises(NumericError):
        gram_matrix(BasisSpec(KnotVector(interior=squeezed, degree=3)))
