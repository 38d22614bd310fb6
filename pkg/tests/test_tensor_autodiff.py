"""Autodiff kernel: forward values against frozen cases, gradients against
central finite differences."""

import numpy as np
import pytest

from triggen.errors import ContractError, NonFiniteError, ShapeError
from triggen.numerics import (
    Tensor,
    add,
    add_n,
    backward,
    concat,
    constant,
    div,
    dropout,
    exp,
    log,
    logsumexp,
    matmul,
    mean,
    mul,
    narrow,
    neg,
    no_grad,
    parameter,
    row,
    rows,
    scale,
    set_strict_finite,
    sigmoid,
    softmax,
    stack,
    sub,
    take,
    tanh,
    total,
)

from .helpers import gradcheck, numeric_grad, relative_error


class TestForwardValues:
    def test_matmul_frozen(self):
        a = constant([[1.0, 2.0], [3.0, 4.0]])
        b = constant([[5.0], [6.0]])
        np.testing.assert_allclose((a @ b).data, [[17.0], [39.0]])

    def test_softmax_frozen(self):
        x = constant([0.0, np.log(3.0)])
        np.testing.assert_allclose(softmax(x).data, [0.25, 0.75], atol=1e-12)

    def test_softmax_shift_invariant(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=7)
        a = softmax(constant(x)).data
        b = softmax(constant(x + 1000.0)).data
        np.testing.assert_allclose(a, b, atol=1e-12)
        assert abs(a.sum() - 1.0) < 1e-12

    def test_logsumexp_matches_naive(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=9)
        got = logsumexp(constant(x)).data
        np.testing.assert_allclose(got, np.log(np.exp(x).sum()), atol=1e-12)

    def test_logsumexp_large_inputs_stable(self):
        got = logsumexp(constant([1000.0, 1000.0])).data
        np.testing.assert_allclose(got, 1000.0 + np.log(2.0), atol=1e-9)

    def test_tanh_sigmoid_values(self):
        np.testing.assert_allclose(tanh(constant([0.0])).data, [0.0])
        np.testing.assert_allclose(sigmoid(constant([0.0])).data, [0.5])

    def test_elementwise_broadcast(self):
        a = constant([[1.0, 2.0], [3.0, 4.0]])
        b = constant([10.0, 20.0])
        np.testing.assert_allclose((a + b).data, [[11.0, 22.0], [13.0, 24.0]])
        np.testing.assert_allclose((a * b).data, [[10.0, 40.0], [30.0, 80.0]])

    def test_concat_narrow_roundtrip(self):
        a = constant([1.0, 2.0])
        b = constant([3.0])
        c = concat([a, b])
        np.testing.assert_allclose(c.data, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(narrow(c, 0, 2).data, [1.0, 2.0])
        np.testing.assert_allclose(narrow(c, 2, 3).data, [3.0])

    def test_rows_and_take(self):
        m = constant([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        np.testing.assert_allclose(rows(m, [2, 0]).data, [[5.0, 6.0], [1.0, 2.0]])
        v = constant([10.0, 20.0, 30.0])
        np.testing.assert_allclose(take(v, [1, 1, 2]).data, [20.0, 20.0, 30.0])


class TestShapeAndFiniteChecks:
    def test_matmul_mismatch_raises(self):
        with pytest.raises(ShapeError):
            matmul(constant([[1.0, 2.0]]), constant([[1.0, 2.0]]))

    def test_softmax_rejects_2d(self):
        with pytest.raises(ShapeError):
            softmax(constant([[1.0, 2.0]]))

    def test_softmax_rejects_empty(self):
        with pytest.raises(ShapeError):
            softmax(constant(np.zeros(0)))

    def test_nonfinite_detected(self):
        with pytest.raises(NonFiniteError):
            log(constant([0.0]))

    def test_strict_finite_toggle(self):
        set_strict_finite(False)
        try:
            out = log(constant([0.0]))
            assert np.isneginf(out.data[0])
        finally:
            set_strict_finite(True)

    def test_backward_rejects_nonscalar(self):
        p = parameter([1.0, 2.0])
        with pytest.raises(ContractError):
            backward(p)


class TestGradients:
    def test_tanh_derivative_at_zero(self):
        p = parameter([0.0])
        g = backward(total(tanh(p)))[p]
        np.testing.assert_allclose(g, [1.0], atol=1e-12)

    def test_every_op_gradcheck(self):
        rng = np.random.default_rng(42)
        a = parameter(rng.normal(size=(3, 4)))
        b = parameter(rng.normal(size=(3, 4)))
        m = parameter(rng.normal(size=(4, 2)))
        v = parameter(rng.normal(size=4))
        pos = parameter(rng.uniform(0.5, 2.0, size=(3, 4)))

        cases = [
            (lambda: total(add(a, b)), [a, b]),
            (lambda: total(sub(a, b)), [a, b]),
            (lambda: total(mul(a, b)), [a, b]),
            (lambda: total(div(a, pos)), [a, pos]),
            (lambda: total(neg(a)), [a]),
            (lambda: total(scale(a, 2.5)), [a]),
            (lambda: total(matmul(a, m)), [a, m]),
            (lambda: total(matmul(v, m)), [v, m]),
            (lambda: total(tanh(a)), [a]),
            (lambda: total(sigmoid(a)), [a]),
            (lambda: total(exp(scale(a, 0.3))), [a]),
            (lambda: total(log(pos)), [pos]),
            (lambda: mean(mul(a, a)), [a]),
            (lambda: total(mul(softmax(v), constant([0.3, -0.2, 0.5, 0.1]))), [v]),
            (lambda: logsumexp(v), [v]),
            (lambda: total(take(v, [0, 2, 2])), [v]),
            (lambda: total(mul(rows(a, [1, 1, 0]), constant(np.ones((3, 4))))), [a]),
            (lambda: total(row(a, 2)), [a]),
            (lambda: total(narrow(v, 1, 3)), [v]),
            (lambda: total(concat([v, tanh(v)])), [v]),
            (lambda: total(stack([v, mul(v, v)])), [v]),
            (lambda: total(add_n([a, mul(a, b), b])), [a, b]),
        ]
        for build, params in cases:
            gradcheck(build, params)

    def test_matmul_vector_cases(self):
        rng = np.random.default_rng(3)
        m = parameter(rng.normal(size=(4, 3)))
        v = parameter(rng.normal(size=3))
        u = parameter(rng.normal(size=4))
        gradcheck(lambda: total(matmul(m, v)), [m, v])
        gradcheck(lambda: matmul(u, matmul(m, v)), [u, m, v])

    def test_broadcast_gradients(self):
        rng = np.random.default_rng(4)
        a = parameter(rng.normal(size=(3, 4)))
        b = parameter(rng.normal(size=4))
        gradcheck(lambda: total(mul(add(a, b), add(a, b))), [a, b])

    def test_reused_node_accumulates(self):
        # y = x*x + x: dy/dx = 2x + 1
        p = parameter([1.5])
        loss = total(add(mul(p, p), p))
        g = backward(loss)[p]
        np.testing.assert_allclose(g, [4.0], atol=1e-12)

    def test_deep_chain_no_recursion_limit(self):
        p = parameter([0.1])
        x = p
        for _ in range(5000):
            x = add(x, constant([0.0]))
        g = backward(total(x))[p]
        np.testing.assert_allclose(g, [1.0])

    def test_backward_pure_same_graph_twice(self):
        rng = np.random.default_rng(5)
        a = parameter(rng.normal(size=(3, 3)))
        loss = total(tanh(matmul(a, a)))
        g1 = backward(loss)[a]
        g2 = backward(loss)[a]
        np.testing.assert_array_equal(g1, g2)

    def test_unreached_param_zero_grad(self):
        a = parameter([1.0])
        b = parameter([2.0])
        grads = backward(total(mul(a, a)), params=[a, b])
        np.testing.assert_allclose(grads[b], [0.0])

    def test_dropout_scaling_and_grad(self):
        rng = np.random.default_rng(6)
        p = parameter(np.ones(1000))
        out = dropout(p, 0.4, np.random.default_rng(7))
        kept = out.data != 0.0
        # inverted dropout: surviving entries scaled by 1/keep
        np.testing.assert_allclose(out.data[kept], 1.0 / 0.6)
        assert abs(kept.mean() - 0.6) < 0.05
        g = backward(total(out))[p]
        np.testing.assert_allclose(g[kept], 1.0 / 0.6)
        np.testing.assert_allclose(g[~kept], 0.0)

    def test_dropout_zero_rate_identity(self):
        p = parameter([1.0, 2.0])
        assert dropout(p, 0.0, np.random.default_rng(0)) is p

    def test_no_grad_builds_no_graph(self):
        p = parameter([1.0, 2.0])
        with no_grad():
            out = tanh(p)
        assert out._parents == ()

    def test_composite_expression_gradcheck(self):
        # a miniature of the real model's per-step math
        rng = np.random.default_rng(8)
        W = parameter(rng.normal(scale=0.3, size=(5, 4)))
        U = parameter(rng.normal(scale=0.3, size=(4, 4)))
        x = parameter(rng.normal(size=5))
        h = parameter(rng.normal(size=4))

        def build():
            z = add(matmul(x, W), matmul(h, U))
            s = tanh(z)
            att = softmax(matmul(s, U))
            ctx = matmul(att, U)
            sc = concat([s, ctx])
            return logsumexp(sc)

        gradcheck(build, [W, U, x, h])


class TestNumericGradOracle:
    def test_oracle_on_closed_form(self):
        # sanity for the oracle itself: d/dx sum(x^2) = 2x
        x = np.array([1.0, -2.0, 0.5])
        g = numeric_grad(lambda: float((x**2).sum()), x)
        np.testing.assert_allclose(g, 2 * x, atol=1e-6)

    def test_relative_error_zero_for_identical(self):
        a = np.array([1.0, 2.0])
        assert relative_error(a, a.copy()) == 0.0
