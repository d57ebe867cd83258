import math
from fractions import Fraction

import numpy as np
import pytest

from hemifol import expr as ex


def test_parse_five_term_sum():
    e = ex.parse("a*x + a*y + x*y - c1*x^3 - c2*y^3")
    b = dict(a=0.5, x=1.0, y=2.0, c1=0.1, c2=0.2)
    # 0.5 + 1.0 + 2.0 - 0.1 - 1.6
    assert ex.evaluate(e, b) == pytest.approx(1.8)
    assert ex.free_variables(e) == {"a", "x", "y", "c1", "c2"}


def test_parse_zero():
    assert ex.evaluate(ex.parse("0"), {}) == 0.0


def test_parse_ln_over_sum():
    e = ex.parse("ln(1+w3)/2")
    assert ex.evaluate(e, {"w3": 1.0}) == pytest.approx(math.log(2) / 2)


def test_parse_decimal_is_exact():
    e = ex.parse("0.75")
    assert e.payload == Fraction(3, 4)


def test_parse_errors_carry_offset():
    with pytest.raises(ex.ParseError) as err:
        ex.parse("a + * b")
    assert err.value.offset == 4
    with pytest.raises(ex.ReservedNameError):
        ex.parse("ln + 1")
    with pytest.raises(ex.ParseError):
        ex.parse("a + (b")


def test_diff_power():
    d = ex.diff(ex.parse("x^3"), "x")
    for x in (0.3, -1.2, 2.0):
        assert ex.evaluate(d, {"x": x}) == pytest.approx(3 * x * x)


def test_diff_ln():
    d = ex.diff(ex.parse("ln(1+w3)"), "w3")
    for t in (0.0, 0.5, 0.9):
        assert ex.evaluate(d, {"w3": t}) == pytest.approx(1 / (1 + t))


def test_diff_of_constant_is_zero():
    assert ex.diff(ex.parse("3/7"), "x") is ex.ZERO
    assert ex.diff(ex.pi, "x") is ex.ZERO


def test_eval_direct_arithmetic():
    p = ex.parse("1 - 15*a^4 + 2*a^6")
    assert ex.evaluate(p, {"a": 0.5}) == 1 - 15 * 0.5 ** 4 + 2 * 0.5 ** 6
    assert ex.evaluate(p, {"a": 0.5}) == pytest.approx(0.09375)
    assert ex.evaluate(p, {"a": 0.52}) == 1 - 15 * 0.52 ** 4 + 2 * 0.52 ** 6
    assert ex.evaluate(p, {"a": 0.52}) < 0


def test_eval_errors():
    with pytest.raises(ex.UnboundVariableError):
        ex.evaluate(ex.parse("x + y"), {"x": 1.0})
    with pytest.raises(ex.DomainError) as err:
        ex.evaluate(ex.parse("ln(x)"), {"x": -1.0})
    assert "ln(x)" in str(err.value)
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("1/x"), {"x": 0.0})
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("artanh(x)"), {"x": 1.0})


def test_eval_vectorized():
    e = ex.parse("x^2 + 1")
    out = ex.evaluate(e, {"x": np.array([1.0, 2.0, 3.0])})
    assert np.allclose(out, [2.0, 5.0, 10.0])


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------

def test_jet_square():
    j = ex.evaluate_jet(ex.parse("x^2"), {"x": ex.Jet2(1.0, 1.0, 0.0)})
    assert (j.f, j.d1, j.d2) == (1.0, 2.0, 2.0)


def test_jet_log():
    j = ex.evaluate_jet(ex.parse("ln(1+x)"), {"x": ex.Jet2(0.0, 1.0, 0.0)})
    assert (j.f, j.d1, j.d2) == (0.0, 1.0, -1.0)


def test_jet_sqrt():
    j = ex.evaluate_jet(ex.parse("sqrt(x)"), {"x": ex.Jet2(1.0, 2.0, 0.0)})
    assert j.f == 1.0
    assert j.d1 == pytest.approx(1.0)
    assert j.d2 == pytest.approx(-1.0)


def test_jet_constants_have_zero_derivatives():
    j = ex.evaluate_jet(ex.parse("pi + 3/4"), {})
    assert j.d1 == 0.0 and j.d2 == 0.0
    assert j.f == pytest.approx(math.pi + 0.75)


def test_jet_product_rule_exact():
    rng = np.random.default_rng(1)
    for _ in range(30):
        a = ex.Jet2(*rng.uniform(-2, 2, 3))
        b = ex.Jet2(*rng.uniform(-2, 2, 3))
        prod = a * b
        assert prod.f == a.f * b.f
        assert prod.d1 == a.f * b.d1 + a.d1 * b.f
        assert prod.d2 == a.f * b.d2 + 2.0 * a.d1 * b.d1 + a.d2 * b.f


# ---------------------------------------------------------------------------
# random expressions: round trip and derivative properties
# ---------------------------------------------------------------------------

def _random_expr(rng, depth=3):
    if depth == 0 or rng.random() < 0.25:
        choice = rng.integers(0, 3)
        if choice == 0:
            return ex.var(str(rng.choice(["x", "y"])))
        if choice == 1:
            return ex.const(Fraction(int(rng.integers(1, 6)),
                                     int(rng.integers(1, 6))))
        return ex.pi
    op = rng.choice(["add", "sub", "mul", "div", "pow", "ln", "sqrt",
                     "sin", "cos", "artanh"])
    a = _random_expr(rng, depth - 1)
    if op == "add":
        return a + _random_expr(rng, depth - 1)
    if op == "sub":
        return a - _random_expr(rng, depth - 1)
    if op == "mul":
        return a * _random_expr(rng, depth - 1)
    if op == "div":
        return a / (1 + _random_expr(rng, depth - 1) ** 2)
    if op == "pow":
        return a ** int(rng.integers(2, 4))
    if op == "ln":
        return ex.ln(1 + a ** 2)
    if op == "sqrt":
        return ex.sqrt(1 + a ** 2)
    if op == "artanh":
        return ex.artanh(a / (2 + 2 * a ** 2))
    return getattr(ex, op)(a)


def test_roundtrip_print_parse():
    rng = np.random.default_rng(7)
    for _ in range(40):
        e = _random_expr(rng)
        e2 = ex.parse(ex.to_string(e))
        pts = {"x": rng.uniform(-1.5, 1.5, 100), "y": rng.uniform(-1.5, 1.5, 100)}
        got = np.broadcast_to(ex.evaluate(e2, pts), (100,))
        want = np.broadcast_to(ex.evaluate(e, pts), (100,))
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_symbolic_derivative_vs_finite_difference():
    rng = np.random.default_rng(11)
    h = 1e-5
    checked = 0
    while checked < 50:
        e = _random_expr(rng)
        if "x" not in ex.free_variables(e):
            continue
        d = ex.diff(e, "x")
        x, y = rng.uniform(-1.0, 1.0, 2)
        up = ex.evaluate(e, {"x": x + h, "y": y})
        dn = ex.evaluate(e, {"x": x - h, "y": y})
        fd = (up - dn) / (2 * h)
        sym = ex.evaluate(d, {"x": x, "y": y})
        assert sym == pytest.approx(fd, rel=1e-6, abs=1e-6)
        checked += 1


def test_jet_matches_symbolic_derivatives():
    rng = np.random.default_rng(13)
    checked = 0
    while checked < 30:
        e = _random_expr(rng)
        if "x" not in ex.free_variables(e):
            continue
        x0, y0 = rng.uniform(-1.0, 1.0, 2)
        jet = ex.evaluate_jet(e, {"x": ex.Jet2(x0, 1.0, 0.0),
                                  "y": ex.Jet2(y0, 0.0, 0.0)})
        d1 = ex.evaluate(ex.diff(e, "x"), {"x": x0, "y": y0})
        d2 = ex.evaluate(ex.diff(ex.diff(e, "x"), "x"), {"x": x0, "y": y0})
        assert jet.d1 == pytest.approx(d1, rel=1e-10, abs=1e-10)
        assert jet.d2 == pytest.approx(d2, rel=1e-10, abs=1e-10)
        checked += 1


def test_substitute():
    e = ex.parse("a*x + b")
    s = ex.substitute(e, {"a": ex.const(2), "b": ex.parse("x^2")})
    assert ex.evaluate(s, {"x": 3.0}) == pytest.approx(15.0)


def test_artanh_representable():
    # the homogeneous ODE solution artanh(cos theta) - 1 must be expressible
    e = ex.artanh(ex.cos(ex.var("theta"))) - 1
    val = ex.evaluate(e, {"theta": math.pi / 3})
    assert val == pytest.approx(math.atanh(0.5) - 1.0)


def test_cot():
    e = ex.cot(ex.var("x"))
    assert ex.evaluate(e, {"x": math.pi / 4}) == pytest.approx(1.0)
    d = ex.diff(e, "x")
    assert ex.evaluate(d, {"x": math.pi / 4}) == pytest.approx(-2.0)
