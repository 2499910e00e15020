import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statsurf.expressions import ExpressionSyntaxError, gradient, hessian, parse_expression


def ev(src, x):
    return float(parse_expression(src).value(np.asarray(x, dtype=float)))


def test_precedence_and_associativity():
    assert ev("1 + 2*3", [0.0]) == 7.0
    assert ev("2^3^2", [0.0]) == 512.0  # right-assoc
    assert ev("-2^2", [0.0]) == -4.0
    assert ev("(1+2)*3", [0.0]) == 9.0
    assert ev("6/3/2", [0.0]) == 1.0


def test_variables_and_functions():
    assert ev("x1*x2", [3.0, 4.0]) == 12.0
    assert abs(ev("sin(x1)^2 + cos(x1)^2", [0.7]) - 1.0) < 1e-15
    assert abs(ev("exp(ln(x1))", [2.5]) - 2.5) < 1e-15


def test_syntax_errors_carry_position():
    with pytest.raises(ExpressionSyntaxError) as exc:
        parse_expression("x1 + * 2")
    assert exc.value.column == 6
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("x1 +")
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("foo(x1)")


def test_unknown_token_and_trailing_input():
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("x1 $ 2")
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("x1 x1")


def _fd_grad(node, x, eps=1e-6):
    out = np.zeros(len(x))
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += eps
        xm[i] -= eps
        out[i] = (node.value(xp) - node.value(xm)) / (2 * eps)
    return out


@pytest.mark.parametrize("src,n", [
    ("x1^3 - 2*x1 + 1", 1),
    ("sin(x1*x2) + exp(x2/2)", 2),
    ("x1*x2*x3 + cos(x3)^2", 3),
    ("ln(2 + x1^2)", 1),
])
def test_gradient_matches_fd(src, n):
    node = parse_expression(src)
    x = np.linspace(0.3, 0.9, n)
    analytic = np.array([g.value(x) for g in gradient(node, n)])
    assert np.allclose(analytic, _fd_grad(node, x), atol=1e-8)


def test_hessian_symmetric_and_matches_fd():
    node = parse_expression("sin(x1*x2) + x1^2*x2")
    x = np.array([0.4, -0.7])
    H = np.array([[h.value(x) for h in row] for row in hessian(node, 2)])
    assert np.allclose(H, H.T, atol=1e-14)
    eps = 1e-5
    for i in range(2):
        for j in range(2):
            xpp = x.copy(); xpp[i] += eps; xpp[j] += eps
            xpm = x.copy(); xpm[i] += eps; xpm[j] -= eps
            xmp = x.copy(); xmp[i] -= eps; xmp[j] += eps
            xmm = x.copy(); xmm[i] -= eps; xmm[j] -= eps
            fd = (node.value(xpp) - node.value(xpm) - node.value(xmp) + node.value(xmm)) / (4 * eps * eps)
            assert abs(H[i, j] - fd) < 1e-6


def test_text_round_trip_preserves_value():
    src = "-x1^2 + 3*(x2 - 1)/(2 + sin(x1))"
    node = parse_expression(src)
    again = parse_expression(node.text())
    x = np.array([0.3, 1.7])
    assert node.value(x) == again.value(x)


def test_integer_power_avoids_log_domain():
    # x^2 written via Pow must work at negative base
    assert ev("x1^2", [-3.0]) == 9.0
    assert ev("x1^3", [-2.0]) == -8.0


_leaf = st.one_of(
    st.integers(min_value=0, max_value=9).map(lambda k: f"{k}"),
    st.sampled_from(["x1", "x2"]),
)


@st.composite
def _expr(draw, depth=3):
    if depth == 0:
        return draw(_leaf)
    kind = draw(st.integers(min_value=0, max_value=4))
    if kind == 0:
        return draw(_leaf)
    a = draw(_expr(depth=depth - 1))
    b = draw(_expr(depth=depth - 1))
    if kind == 1:
        return f"({a} + {b})"
    if kind == 2:
        return f"({a} - {b})"
    if kind == 3:
        return f"({a} * {b})"
    return f"sin({a})"


@given(_expr())
@settings(max_examples=60, deadline=None)
def test_parse_text_round_trip(src):
    node = parse_expression(src)
    again = parse_expression(node.text())
    x = np.array([0.37, -1.42])
    va, vb = node.value(x), again.value(x)
    assert va == vb or (math.isnan(va) and math.isnan(vb))


def test_batched_evaluation_matches_scalar():
    node = parse_expression("sin(x1) * x2 + x2^2")
    X = np.array([[0.1, 0.2], [1.0, -1.0], [2.0, 0.5]]).T  # (n, B)
    batch = node.value(X)
    for b in range(3):
        assert abs(batch[b] - node.value(X[:, b])) < 1e-15
