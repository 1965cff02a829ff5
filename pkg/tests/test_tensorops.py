"""Tensor primitive tests: frozen examples, independent oracles, invariants."""

import math

import numpy as np
import pytest

from egnn.exceptions import DimensionError, MaskError, OracleError
from egnn.tensorops import (
    act_relu,
    act_relu_grad,
    act_tanh_relu,
    act_tanh_relu_grad,
    finite_difference_grad,
    matmul,
    softmax_columns,
)


def matmul_oracle(a, b):
    """Independent triple-loop product."""
    m, k = len(a), len(a[0])
    p = len(b[0])
    out = [[0.0] * p for _ in range(m)]
    for i in range(m):
        for j in range(p):
            for t in range(k):
                out[i][j] += a[i][t] * b[t][j]
    return np.array(out)


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(matmul(np.eye(2), a), a)

    def test_against_triple_loop(self):
        a = [[1.0, 2.0], [3.0, 4.0]]
        b = [[0.0], [1.0]]
        np.testing.assert_array_equal(matmul(a, b), [[2.0], [4.0]])
        np.testing.assert_array_equal(matmul(a, b), matmul_oracle(a, b))
        rng = np.random.default_rng(0)
        for _ in range(10):
            m, k, p = rng.integers(1, 5, size=3)
            x = rng.uniform(-2, 2, (m, k))
            y = rng.uniform(-2, 2, (k, p))
            np.testing.assert_allclose(matmul(x, y), matmul_oracle(x.tolist(), y.tolist()),
                                       rtol=1e-12, atol=1e-12)

    def test_zero_annihilates(self):
        out = matmul(np.zeros((3, 2)), np.random.default_rng(1).uniform(size=(2, 5)))
        np.testing.assert_array_equal(out, np.zeros((3, 5)))

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 2\)"):
            matmul(np.ones((2, 3)), np.ones((2, 2)))
        with pytest.raises(DimensionError):
            matmul(np.ones(3), np.ones((3, 1)))

    def test_associativity(self, rng):
        for _ in range(10):
            a = rng.uniform(-1, 1, (3, 4))
            b = rng.uniform(-1, 1, (4, 2))
            c = rng.uniform(-1, 1, (2, 5))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            np.testing.assert_allclose(left, right, rtol=1e-9)


class TestSoftmaxColumns:
    def test_symmetric_column(self):
        np.testing.assert_allclose(
            softmax_columns(np.array([[0.0], [0.0]])), [[0.5], [0.5]]
        )

    def test_mask_excludes_row(self):
        out = softmax_columns(np.zeros((3, 1)), mask=[True, True, False])
        np.testing.assert_array_equal(out, [[0.5], [0.5], [0.0]])

    def test_scalar_exp_oracle(self):
        out = softmax_columns(np.array([[1.0], [2.0]]))
        denom = math.exp(1.0) + math.exp(2.0)
        expected = [[math.exp(1.0) / denom], [math.exp(2.0) / denom]]
        np.testing.assert_allclose(out, expected, atol=1e-12)
        np.testing.assert_allclose(out, [[0.26894], [0.73106]], atol=1e-5)

    def test_columns_sum_to_one(self, rng):
        x = rng.uniform(-5, 5, (7, 4))
        mask = np.array([True, True, False, True, True, False, True])
        out = softmax_columns(x, mask)
        np.testing.assert_allclose(out.sum(axis=0), 1.0, atol=1e-12)
        assert (out[~mask] == 0.0).all()

    def test_shift_invariance(self, rng):
        x = rng.uniform(-3, 3, (5, 3))
        shifted = x + np.array([10.0, -4.0, 0.5])
        np.testing.assert_allclose(
            softmax_columns(x), softmax_columns(shifted), atol=1e-12
        )

    def test_batched_matches_per_graph(self, rng):
        x = rng.uniform(-2, 2, (3, 5, 2))
        mask = rng.uniform(size=(3, 5)) > 0.3
        mask[:, 0] = True
        batched = softmax_columns(x, mask)
        for b in range(3):
            np.testing.assert_allclose(batched[b], softmax_columns(x[b], mask[b]))

    def test_all_false_mask(self):
        with pytest.raises(MaskError):
            softmax_columns(np.zeros((2, 2)), mask=[False, False])

    def test_large_masked_values_do_not_overflow(self):
        x = np.array([[0.0], [1e6]])
        out = softmax_columns(x, mask=[True, False])
        np.testing.assert_array_equal(out, [[1.0], [0.0]])


class TestActivations:
    def test_tanh_relu_examples(self):
        assert act_tanh_relu(-5.0) == 0.0
        assert act_tanh_relu(0.0) == 0.0
        np.testing.assert_allclose(act_tanh_relu(1.0), math.tanh(1.0), atol=1e-12)
        np.testing.assert_allclose(act_tanh_relu(1.0), 0.76159, atol=1e-5)

    def test_tanh_relu_range_and_monotone(self, rng):
        x = np.sort(np.concatenate([rng.uniform(-50, 50, 1000), [0.0, 25.0, 1e6]]))
        y = act_tanh_relu(x)
        assert (y >= 0.0).all() and (y < 1.0).all()
        assert (np.diff(y) >= 0.0).all()
        assert (act_tanh_relu(x[x <= 0]) == 0.0).all()

    def test_relu(self):
        np.testing.assert_array_equal(act_relu([-1.0, 0.0, 2.0]), [0.0, 0.0, 2.0])
        np.testing.assert_array_equal(act_relu_grad([-1.0, 0.0, 2.0]), [0.0, 0.0, 1.0])

    def test_tanh_relu_grad_matches_finite_differences(self, rng):
        x = rng.uniform(0.1, 3.0, 20)  # away from the kink
        numeric = finite_difference_grad(lambda v: float(np.sum(act_tanh_relu(v))), x)
        np.testing.assert_allclose(act_tanh_relu_grad(x), numeric, atol=1e-8)
        assert (act_tanh_relu_grad(-x) == 0.0).all()
        assert act_tanh_relu_grad(0.0) == 0.0


class TestFiniteDifferenceGrad:
    def test_quadratic(self):
        grad = finite_difference_grad(lambda x: float(np.sum(x * x)), np.array([3.0]))
        np.testing.assert_allclose(grad, [6.0], atol=1e-6)

    def test_linear(self, rng):
        x = rng.uniform(-4, 4, (3, 2))
        grad = finite_difference_grad(lambda v: float(np.sum(v)), x)
        np.testing.assert_allclose(grad, np.ones_like(x), atol=1e-9)

    def test_quadratic_form(self, rng):
        m = rng.uniform(-1, 1, (4, 4))
        x = rng.uniform(-1, 1, 4)
        grad = finite_difference_grad(lambda v: float(v @ m @ v), x)
        expected = (m + m.T) @ x
        np.testing.assert_allclose(grad, expected, rtol=1e-6)

    def test_non_finite_raises(self):
        def bad(x):
            with np.errstate(invalid="ignore"):
                return float(np.log(x[0]))

        with pytest.raises(OracleError):
            finite_difference_grad(bad, np.array([1e-9]))

    def test_eps_validation(self):
        with pytest.raises(ValueError):
            finite_difference_grad(lambda x: 0.0, np.array([1.0]), eps=0.0)
