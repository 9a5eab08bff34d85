import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rigidlab.expressions import (Binary, ExpressionError, Num, Pow, Unary,
                                  Var, evaluate_jet, parse_expression,
                                  to_text)


def test_parse_product_of_trig():
    tree = parse_expression("sin(x1)*cos(x2)", 2)
    assert tree == Binary("*", Unary("sin", Var(1)), Unary("cos", Var(2)))


def test_parse_square_plus_literal():
    tree = parse_expression("x1^2 + 1", 1)
    assert tree == Binary("+", Pow(Var(1), 2), Num(1.0))


def test_unbalanced_paren_offset():
    with pytest.raises(ExpressionError) as err:
        parse_expression("sin(x1", 1)
    assert err.value.offset == 7


def test_unknown_identifier():
    with pytest.raises(ExpressionError, match="unknown identifier"):
        parse_expression("sin(q)", 1)


def test_variable_index_exceeds_dim():
    with pytest.raises(ExpressionError, match="exceeds chart dimension"):
        parse_expression("x3 + 1", 2)


def test_fractional_exponent_rejected():
    with pytest.raises(ExpressionError):
        parse_expression("x1^1.5", 1)


def test_jet_of_square():
    jet = evaluate_jet(parse_expression("x1^2", 1), [3.0], order=2)
    assert jet.value == pytest.approx(9.0)
    assert jet.grad == pytest.approx(np.array([6.0]))
    assert jet.hess == pytest.approx(np.array([[2.0]]))


def test_jet_of_sine_at_zero():
    jet = evaluate_jet(parse_expression("sin(x1)", 1), [0.0], order=3)
    assert jet.value == pytest.approx(0.0)
    assert jet.grad == pytest.approx(np.array([1.0]))
    assert jet.hess == pytest.approx(np.array([[0.0]]))
    assert jet.third == pytest.approx(np.array([[[-1.0]]]))


def test_gradient_matches_central_differences():
    ast = parse_expression("sin(x1)*cos(x2)", 2)
    p = np.array([0.3, 0.7])
    jet = evaluate_jet(ast, p, order=1)
    h = 1e-5

    def f(q):
        return np.sin(q[0]) * np.cos(q[1])

    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (f(p + e) - f(p - e)) / (2 * h)
        assert abs(jet.grad[i] - fd) < 1e-8


# -- random ASTs ------------------------------------------------------------

def _leaf(dim):
    return st.one_of(
        st.integers(1, dim).map(Var),
        st.floats(0.0, 1.5, allow_nan=False).map(lambda v: Num(round(v, 3))),
    )


def _total_ops(children):
    unary = st.sampled_from(["neg", "sin", "cos", "exp"])
    binary = st.sampled_from(["+", "-", "*"])
    return st.one_of(
        st.tuples(unary, children).map(lambda t: Unary(*t)),
        st.tuples(binary, children, children).map(lambda t: Binary(*t)),
        st.tuples(children, st.integers(0, 3)).map(lambda t: Pow(*t)),
    )


def ast_strategy(dim=2, depth=6):
    return st.recursive(_leaf(dim), _total_ops, max_leaves=2 ** depth)


@settings(max_examples=120, deadline=None)
@given(ast_strategy())
def test_round_trip_through_canonical_printer(tree):
    assert parse_expression(to_text(tree), 2) == tree


@settings(max_examples=60, deadline=None)
@given(ast_strategy(depth=6), st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_jet_matches_finite_differences(tree, px, py):
    p = np.array([px, py])
    jet = evaluate_jet(tree, p, order=2)
    if not np.all(np.isfinite(jet.value)) or abs(jet.value) > 1e3 \
            or np.max(np.abs(jet.hess)) > 1e3:
        return
    h = 1e-5

    def f(q):
        return evaluate_jet(tree, q, order=0).value

    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (f(p + e) - f(p - e)) / (2 * h)
        scale = max(1.0, abs(jet.grad[i]))
        assert abs(jet.grad[i] - fd) / scale < 1e-6
    hh = 1e-4
    for i in range(2):
        e = np.zeros(2)
        e[i] = hh
        fd2 = (f(p + e) - 2 * f(p) + f(p - e)) / hh ** 2
        scale = max(1.0, abs(jet.hess[i, i]))
        assert abs(jet.hess[i, i] - fd2) / scale < 1e-5
