"""Tests for the cost functions, their displayed averages, and the exact
gradient/Hessian against finite-difference and direct-summation oracles."""

import numpy as np
import pytest

from logdetfit.cost import (
    Dataset,
    Gls,
    LogDet,
    Ols,
    a_matrix,
    b_matrix,
    c_matrix,
    cost,
    empirical_cov,
    evaluate,
    fallback_jitter,
    gradient,
    hessian,
    hessian_terms,
    residuals,
)
from logdetfit.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NotPositiveDefinite,
    SingularCovariance,
)
from logdetfit.mlp import Architecture, ParamVector, forward, jacobian, second_derivative
from logdetfit.spd import SpdMatrix, trace_product

LN_4 = 1.3862943611198906


def make_case(rng, q=2, hidden=(2,), d=2, n=50, noise=0.5):
    arch = Architecture(q, hidden, d)
    w = ParamVector(rng.uniform(-1.5, 1.5, arch.param_count), arch)
    z = rng.uniform(-2, 2, (n, q))
    y = forward(w, z) + noise * rng.standard_normal((n, d))
    return w, Dataset(z, y)


class TestDataset:
    def test_row_count_mismatch(self):
        with pytest.raises(DimensionMismatch):
            Dataset(np.zeros((3, 2)), np.zeros((4, 2)))

    def test_requires_2d(self):
        with pytest.raises(DimensionMismatch):
            Dataset(np.zeros(3), np.zeros((3, 1)))

    def test_empty_rejected(self):
        with pytest.raises(DimensionMismatch):
            Dataset(np.zeros((0, 2)), np.zeros((0, 2)))

    def test_arrays_read_only(self):
        data = Dataset(np.zeros((2, 1)), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            data.inputs[0, 0] = 1.0


class TestResiduals:
    def test_zero_network_returns_targets(self):
        arch = Architecture(2, (2,), 2)
        w = ParamVector(np.zeros(arch.param_count), arch)
        rng = np.random.default_rng(0)
        data = Dataset(rng.standard_normal((5, 2)), rng.standard_normal((5, 2)))
        np.testing.assert_array_equal(residuals(w, data), data.targets)

    def test_exact_targets_give_zero(self):
        rng = np.random.default_rng(1)
        w, _ = make_case(rng)
        z = rng.uniform(-2, 2, (6, 2))
        data = Dataset(z, forward(w, z))
        np.testing.assert_allclose(residuals(w, data), np.zeros((6, 2)), atol=1e-15)

    def test_matches_row_wise_recomputation(self):
        rng = np.random.default_rng(2)
        w, data = make_case(rng)
        r = residuals(w, data)
        for t in range(data.n):
            np.testing.assert_allclose(
                r[t], data.targets[t] - forward(w, data.inputs[t]), rtol=1e-14
            )

    def test_shape_guard(self):
        rng = np.random.default_rng(3)
        w, _ = make_case(rng)
        with pytest.raises(DimensionMismatch):
            residuals(w, Dataset(np.zeros((4, 3)), np.zeros((4, 2))))


class TestEmpiricalCov:
    def test_hand_case(self):
        rows = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        np.testing.assert_allclose(empirical_cov(rows).entries, np.diag([0.5, 0.5]))

    def test_rank_one_raises(self):
        rows = np.array([[1.0, 1.0], [-1.0, -1.0]])
        with pytest.raises(SingularCovariance):
            empirical_cov(rows)

    def test_jitter_rescues_rank_deficiency(self):
        rows = np.array([[1.0, 1.0], [-1.0, -1.0]])
        g = empirical_cov(rows, jitter=1e-6)
        np.testing.assert_allclose(g.entries, [[1 + 1e-6, 1.0], [1.0, 1 + 1e-6]])

    def test_negative_jitter_rejected(self):
        with pytest.raises(DimensionMismatch):
            empirical_cov(np.ones((3, 1)), jitter=-1.0)

    def test_law_of_large_numbers(self):
        rng = np.random.default_rng(4)
        g0 = np.array([[1.0, 0.9], [0.9, 1.0]])
        rows = rng.multivariate_normal(np.zeros(2), g0, size=500)
        est = empirical_cov(rows)
        assert np.max(np.abs(est.entries - g0)) < 0.15

    def test_fallback_jitter_scale(self):
        rows = np.array([[2.0], [0.0]])
        # tr(Gamma)/d = mean squared residual = 2
        np.testing.assert_allclose(fallback_jitter(rows), 2e-8)


class TestCost:
    def test_scalar_constant_residual(self):
        arch = Architecture(1, (2,), 1)
        w = ParamVector(np.zeros(arch.param_count), arch)
        data = Dataset(np.linspace(-1, 1, 8)[:, None], np.full((8, 1), 2.0))
        np.testing.assert_allclose(cost(LogDet(), w, data), LN_4, rtol=1e-15)
        np.testing.assert_allclose(cost(Ols(), w, data), 4.0, rtol=1e-15)

    def test_identity_weight_equals_least_squares(self):
        rng = np.random.default_rng(5)
        w, data = make_case(rng)
        assert cost(Gls(SpdMatrix(np.eye(2))), w, data) == cost(Ols(), w, data)

    def test_logdet_composition_oracle(self):
        rng = np.random.default_rng(6)
        w, data = make_case(rng)
        r = residuals(w, data)
        sign, ref = np.linalg.slogdet(r.T @ r / data.n)
        assert sign == 1.0
        np.testing.assert_allclose(cost(LogDet(), w, data), ref, rtol=1e-12)

    def test_logdet_needs_more_samples_than_outputs(self):
        rng = np.random.default_rng(7)
        w, _ = make_case(rng, d=2)
        data = Dataset(rng.standard_normal((2, 2)), rng.standard_normal((2, 2)))
        with pytest.raises(SingularCovariance):
            cost(LogDet(), w, data)

    def test_gls_weight_must_be_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            Gls(np.diag([1.0, -1.0]))


class TestDisplayedAverages:
    def test_a_matrix_zero_residuals(self):
        rng = np.random.default_rng(8)
        w, _ = make_case(rng)
        z = rng.uniform(-2, 2, (5, 2))
        data = Dataset(z, forward(w, z))
        np.testing.assert_allclose(a_matrix(w, data, 0), np.zeros((2, 2)), atol=1e-15)

    def test_a_matrix_single_outer_product(self):
        # derivative w.r.t. the first output bias is e_1 for any input, so
        # with one sample and residual (2,3): A = -e_1 (2,3)^T
        rng = np.random.default_rng(9)
        w, _ = make_case(rng)
        _, b_sl, _, _ = w.arch.layer_blocks()[-1]
        z = rng.uniform(-2, 2, (1, 2))
        data = Dataset(z, forward(w, z) + np.array([[2.0, 3.0]]))
        np.testing.assert_allclose(
            a_matrix(w, data, b_sl.start), [[-2.0, -3.0], [0.0, 0.0]], atol=1e-14
        )

    def test_a_matrix_direct_summation(self):
        rng = np.random.default_rng(10)
        w, data = make_case(rng)
        r = residuals(w, data)
        for k in (0, 3, len(w) - 1):
            ref = np.zeros((2, 2))
            for t in range(data.n):
                g = jacobian(w, data.inputs[t])[k]
                ref -= np.outer(g, r[t])
            ref /= data.n
            np.testing.assert_allclose(a_matrix(w, data, k), ref, atol=1e-12)

    def test_b_matrix_diagonal_is_psd(self):
        rng = np.random.default_rng(11)
        w, data = make_case(rng)
        for k in range(len(w)):
            eigs = np.linalg.eigvalsh(b_matrix(w, data, k, k))
            assert eigs.min() >= -1e-14

    def test_b_matrix_output_bias_pair(self):
        rng = np.random.default_rng(12)
        w, data = make_case(rng)
        _, b_sl, _, _ = w.arch.layer_blocks()[-1]
        got = b_matrix(w, data, b_sl.start, b_sl.start + 1)
        np.testing.assert_allclose(got, np.outer([1, 0], [0, 1]), atol=1e-15)

    def test_b_matrix_transpose_relation(self):
        rng = np.random.default_rng(13)
        w, data = make_case(rng)
        k, l = 1, 5
        np.testing.assert_allclose(
            b_matrix(w, data, k, l), b_matrix(w, data, l, k).T, rtol=1e-14
        )

    def test_b_matrix_direct_summation(self):
        rng = np.random.default_rng(14)
        w, data = make_case(rng)
        k, l = 2, 7
        ref = np.zeros((2, 2))
        for t in range(data.n):
            jac = jacobian(w, data.inputs[t])
            ref += np.outer(jac[k], jac[l])
        ref /= data.n
        np.testing.assert_allclose(b_matrix(w, data, k, l), ref, atol=1e-12)

    def test_c_matrix_zero_residuals(self):
        rng = np.random.default_rng(15)
        w, _ = make_case(rng)
        z = rng.uniform(-2, 2, (5, 2))
        data = Dataset(z, forward(w, z))
        np.testing.assert_allclose(c_matrix(w, data, 0, 1), np.zeros((2, 2)), atol=1e-15)

    def test_c_matrix_output_layer_pair_vanishes(self):
        rng = np.random.default_rng(16)
        w, data = make_case(rng)
        w_sl, b_sl, _, _ = w.arch.layer_blocks()[-1]
        got = c_matrix(w, data, w_sl.start, b_sl.stop - 1)
        np.testing.assert_array_equal(got, np.zeros((2, 2)))

    def test_c_matrix_direct_summation(self):
        rng = np.random.default_rng(17)
        w, data = make_case(rng)
        r = residuals(w, data)
        k, l = 0, len(w) - 1
        ref = np.zeros((2, 2))
        for t in range(data.n):
            h = second_derivative(w, data.inputs[t], k, l)
            ref -= np.outer(r[t], h)
        ref /= data.n
        np.testing.assert_allclose(c_matrix(w, data, k, l), ref, atol=1e-12)

    def test_index_bounds(self):
        rng = np.random.default_rng(18)
        w, data = make_case(rng)
        with pytest.raises(IndexOutOfRange):
            a_matrix(w, data, len(w))
        with pytest.raises(IndexOutOfRange):
            b_matrix(w, data, 0, len(w))


def fd_gradient(kind, w, data, step=1e-6):
    p = len(w)
    out = np.empty(p)
    for k in range(p):
        e = np.zeros(p)
        e[k] = step
        hi = cost(kind, w.with_values(w.values + e), data)
        lo = cost(kind, w.with_values(w.values - e), data)
        out[k] = (hi - lo) / (2 * step)
    return out


def fd_hessian(w, data, step=1e-5):
    p = len(w)
    out = np.empty((p, p))
    for k in range(p):
        e = np.zeros(p)
        e[k] = step
        hi = gradient(LogDet(), w.with_values(w.values + e), data)
        lo = gradient(LogDet(), w.with_values(w.values - e), data)
        out[:, k] = (hi - lo) / (2 * step)
    return out


class TestGradient:
    def test_scalar_case_symbolic(self):
        rng = np.random.default_rng(19)
        w, data = make_case(rng, q=1, hidden=(2,), d=1, n=30)
        r = residuals(w, data)
        jac = jacobian(w, data.inputs)
        m = float(np.mean(r * r))
        ref = (-2.0 / data.n) * np.einsum("npd,nd->p", jac, r) / m
        np.testing.assert_allclose(gradient(LogDet(), w, data), ref, rtol=1e-12)

    def test_frozen_weight_matches_logdet_gradient(self):
        rng = np.random.default_rng(20)
        w, data = make_case(rng)
        gamma = empirical_cov(residuals(w, data))
        np.testing.assert_allclose(
            gradient(Gls(gamma), w, data), gradient(LogDet(), w, data), rtol=1e-12
        )

    def test_identity_weight_matches_least_squares_bitwise(self):
        rng = np.random.default_rng(21)
        w, data = make_case(rng)
        g_id = gradient(Gls(SpdMatrix(np.eye(2))), w, data)
        g_ls = gradient(Ols(), w, data)
        assert np.max(np.abs(g_id - g_ls)) <= 1e-15

    def test_finite_difference_all_kinds(self):
        rng = np.random.default_rng(22)
        kinds_seen = set()
        for trial in range(100):
            q = int(rng.integers(1, 4))
            d = int(rng.integers(1, 4))
            hidden = (int(rng.integers(1, 4)),)
            n = int(rng.integers(20, 80))
            w, data = make_case(rng, q=q, hidden=hidden, d=d, n=n)
            kind = [LogDet(), Ols(), Gls(SpdMatrix(np.eye(d) + 0.1))][trial % 3]
            kinds_seen.add(type(kind).__name__)
            got = gradient(kind, w, data)
            ref = fd_gradient(kind, w, data)
            scale = max(1.0, np.max(np.abs(ref)))
            assert np.max(np.abs(got - ref)) / scale < 1e-6
        assert kinds_seen == {"LogDet", "Ols", "Gls"}

    def test_trace_formulation_agrees_with_solve_path(self):
        rng = np.random.default_rng(23)
        w, data = make_case(rng)
        gamma_inv = empirical_cov(residuals(w, data)).inverse().entries
        grad = gradient(LogDet(), w, data)
        for k in range(len(w)):
            via_trace = 2.0 * trace_product(gamma_inv, a_matrix(w, data, k))
            assert abs(via_trace - grad[k]) <= 1e-10 * max(1.0, abs(grad[k]))


class TestHessian:
    def test_finite_difference(self):
        rng = np.random.default_rng(24)
        for _ in range(10):
            q = int(rng.integers(1, 3))
            d = int(rng.integers(1, 4))
            hidden = (int(rng.integers(1, 4)),)
            w, data = make_case(rng, q=q, hidden=hidden, d=d, n=40)
            got = hessian(LogDet(), w, data)
            ref = fd_hessian(w, data)
            assert np.max(np.abs(got - ref)) < 1e-5

    def test_quadratic_term_sign_pinned_by_finite_differences(self):
        # flipping the quadratic A-term to +4 tr(G^-1 A_k G^-1 A_l) breaks
        # the finite-difference match by orders of magnitude
        rng = np.random.default_rng(25)
        w, data = make_case(rng, n=60)
        gamma_inv = empirical_cov(residuals(w, data)).inverse().entries
        p = len(w)
        term_a, term_b, term_c = hessian_terms(w, data)
        quad_plus = np.empty((p, p))
        for k in range(p):
            ak = gamma_inv @ a_matrix(w, data, k)
            for l in range(p):
                al = gamma_inv @ a_matrix(w, data, l)
                quad_plus[k, l] = 4.0 * np.trace(ak @ al)
        ref = fd_hessian(w, data)
        assert np.max(np.abs(term_a + term_b + term_c - ref)) < 1e-5
        assert np.max(np.abs(quad_plus + term_b + term_c - ref)) > 1e-3

    def test_symmetry_before_symmetrization(self):
        rng = np.random.default_rng(26)
        w, data = make_case(rng)
        raw = sum(hessian_terms(w, data))
        skew = np.abs(raw - raw.T)
        assert np.all(skew < 1e-8 * (1.0 + np.abs(raw)))

    def test_terms_match_naive_inverse_oracle(self):
        rng = np.random.default_rng(27)
        w, data = make_case(rng, n=30)
        p = len(w)
        gamma_inv = empirical_cov(residuals(w, data)).inverse().entries
        a_stack = [a_matrix(w, data, k) for k in range(p)]
        ref_a = np.empty((p, p))
        ref_b = np.empty((p, p))
        ref_c = np.empty((p, p))
        for k in range(p):
            for l in range(p):
                ga_k = gamma_inv @ a_stack[k]
                ga_l = gamma_inv @ a_stack[l]
                gat_k = gamma_inv @ a_stack[k].T
                ref_a[k, l] = -2.0 * (np.trace(ga_k @ ga_l) + np.trace(gat_k @ ga_l))
                ref_b[k, l] = 2.0 * np.trace(gamma_inv @ b_matrix(w, data, k, l))
                ref_c[k, l] = 2.0 * np.trace(gamma_inv @ c_matrix(w, data, k, l))
        term_a, term_b, term_c = hessian_terms(w, data)
        scale = max(1.0, np.max(np.abs(ref_a)), np.max(np.abs(ref_b)), np.max(np.abs(ref_c)))
        assert np.max(np.abs(term_a - ref_a)) <= 1e-10 * scale
        assert np.max(np.abs(term_b - ref_b)) <= 1e-10 * scale
        assert np.max(np.abs(term_c - ref_c)) <= 1e-10 * scale

    def test_scalar_case_symbolic(self):
        rng = np.random.default_rng(28)
        w, data = make_case(rng, q=1, hidden=(2,), d=1, n=30)
        p = len(w)
        r = residuals(w, data)[:, 0]
        jac = jacobian(w, data.inputs)[:, :, 0]
        m = float(np.mean(r * r))
        a = -np.mean(jac * r[:, None], axis=0)
        b = jac.T @ jac / data.n
        c = np.empty((p, p))
        for k in range(p):
            for l in range(p):
                h = second_derivative(w, data.inputs, k, l)[:, 0]
                c[k, l] = -np.mean(r * h)
        ref = 2.0 * (b + c) / m - 4.0 * np.outer(a, a) / m**2
        np.testing.assert_allclose(hessian(LogDet(), w, data), ref, atol=1e-10)

    def test_near_interpolation_dominated_by_gram_term(self):
        rng = np.random.default_rng(29)
        w, _ = make_case(rng)
        z = rng.uniform(-2, 2, (500, 2))
        y = forward(w, z) + 1e-3 * rng.standard_normal((500, 2))
        term_a, term_b, term_c = hessian_terms(w, Dataset(z, y), jitter=1e-10)
        gram = np.linalg.norm(term_b)
        assert gram > 10 * np.linalg.norm(term_a)
        assert gram > 10 * np.linalg.norm(term_c)

    def test_baseline_costs_have_no_analytic_hessian(self):
        rng = np.random.default_rng(30)
        w, data = make_case(rng)
        with pytest.raises(NotImplementedError):
            hessian(Ols(), w, data)


class TestEvaluate:
    def test_bundle_matches_separate_calls(self):
        rng = np.random.default_rng(31)
        w, data = make_case(rng)
        for kind in (LogDet(), Ols(), Gls(SpdMatrix(np.eye(2) * 2.0))):
            bundle = evaluate(kind, w, data)
            np.testing.assert_allclose(bundle.cost, cost(kind, w, data), rtol=1e-15)
            np.testing.assert_allclose(bundle.gradient, gradient(kind, w, data), rtol=1e-15)
            assert bundle.hessian is None

    def test_bundle_with_hessian(self):
        rng = np.random.default_rng(32)
        w, data = make_case(rng)
        bundle = evaluate(LogDet(), w, data, want_hessian=True)
        np.testing.assert_allclose(bundle.hessian, hessian(LogDet(), w, data), rtol=1e-14)
