"""Payoff expression language: parsing, printing, evaluation."""

import math

import numpy as np
import pytest

from src.core.errors import (
    DivisionByZero,
    DomainError,
    EvaluationOverflow,
    ExprSyntaxError,
    UnboundVariable,
    UnknownIdentifier,
)
from src.core.expr import (
    BinOp,
    Indicator,
    Neg,
    Num,
    Var,
    bind,
    evaluate,
    evaluate_array,
    indicators,
    negate,
    parse,
    swap_players,
    to_text,
    variables,
)

TOL = 1e-12


class TestParse:

    def test_precedence(self):
        assert evaluate(parse("1 + 2*3")) == 7.0
        assert evaluate(parse("(1 + 2)*3")) == 9.0
        assert evaluate(parse("8 / 4 / 2")) == 1.0

    def test_power_is_right_associative(self):
        assert evaluate(parse("2^3^2")) == 512.0

    def test_unary_minus_binds_looser_than_power(self):
        assert evaluate(parse("-2^2")) == -4.0
        assert evaluate(parse("2^-1")) == 0.5

    def test_indicator_node(self):
        node = parse("[a < b]")
        assert node == Indicator("<", Var("a"), Var("b"))

    def test_variables(self):
        assert variables(parse("x + a^2 - b")) == frozenset({"x", "a", "b"})
        assert variables(parse("3")) == frozenset()

    def test_indicators_in_order(self):
        node = parse("6^a*4^b*[b<a] - 6^b*4^a*[a<b]")
        found = indicators(node)
        assert [ind.rel for ind in found] == ["<", "<"]
        assert found[0].left == Var("b")

    def test_parameters(self):
        node = parse("width + abs(x)", params=("width",))
        assert variables(node) == frozenset({"width", "x"})

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifier) as info:
            parse("a + c")
        assert info.value.column == 5
        assert "x" in info.value.expected

    def test_syntax_error_position(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse("a +\n* b")
        assert info.value.line == 2
        assert info.value.column == 1

    def test_unclosed_indicator(self):
        with pytest.raises(ExprSyntaxError):
            parse("[a < b")

    def test_empty(self):
        with pytest.raises(ExprSyntaxError):
            parse("   ")

    def test_function_arity(self):
        with pytest.raises(ExprSyntaxError):
            parse("exp(a, b)")
        with pytest.raises(ExprSyntaxError):
            parse("min(a)")
        assert evaluate(parse("max(a, b, 3)"), a=1, b=2) == 3.0


class TestPrinting:

    @pytest.mark.parametrize("text", [
        "a^2 - b^2",
        "6^a*4^b*[b<a] - 6^b*4^a*[a<b]",
        "-x + min(a, b) / sqrt(abs(x) + 1)",
        "2*[a==b] - 1",
        "1e-05 * exp(-a)",
    ])
    def test_reparse(self, text):
        node = parse(text)
        assert parse(to_text(node)) == node


class TestRewrites:

    def test_bind_replaces_parameters(self):
        node = bind(parse("w * a", params=("w",)), {"w": -2})
        assert node == BinOp("*", Neg(Num(2.0)), Var("a"))
        assert evaluate(node, a=3) == -6.0

    def test_swap_players(self):
        node = swap_players(parse("a - 2*b"))
        assert evaluate(node, a=1, b=10) == pytest.approx(10 - 2)

    def test_negate_collapses(self):
        node = parse("a")
        assert negate(negate(node)) == node


class TestEvaluate:

    def test_indicator_values(self):
        node = parse("[a <= b] + 2*[a == b] + 4*[a > b]")
        assert evaluate(node, a=1, b=1) == 3.0
        assert evaluate(node, a=2, b=1) == 4.0

    def test_arrays_broadcast(self):
        values = evaluate_array(parse("a*b"), a=np.array([[1.0], [2.0]]), b=np.array([1.0, 2.0, 3.0]))
        assert values.shape == (2, 3)
        assert values[1, 2] == 6.0

    def test_scalar_broadcast_to_input_shape(self):
        values = evaluate_array(parse("3"), a=np.zeros(4))
        assert values.shape == (4,)

    def test_unbound(self):
        with pytest.raises(UnboundVariable):
            evaluate(parse("a + b"), a=1)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            evaluate(parse("log(a)"), a=0)
        with pytest.raises(DomainError):
            evaluate(parse("sqrt(a)"), a=-1)
        with pytest.raises(DomainError):
            evaluate(parse("a^0.5"), a=-4)

    def test_division_by_zero(self):
        with pytest.raises(DivisionByZero):
            evaluate(parse("1 / a"), a=0)

    def test_overflow_sign(self):
        with pytest.raises(EvaluationOverflow) as info:
            evaluate(parse("exp(a)"), a=1000)
        assert info.value.sign == 1
        with pytest.raises(EvaluationOverflow) as info:
            evaluate(parse("(-2)^a"), a=2001)
        assert info.value.sign == -1

    def test_signed_overflow_saturates(self):
        values = evaluate_array(parse("6^a - 1"), a=np.array([1.0, 1000.0]), signed_overflow=True)
        assert values[0] == 5.0
        assert values[1] == math.inf

    def test_saturated_zero_factor(self):
        values = evaluate_array(parse("6^a * [a < 0]"), a=np.array([1000.0]), signed_overflow=True)
        assert values[0] == 0.0

    def test_undetermined_overflow(self):
        with pytest.raises(EvaluationOverflow) as info:
            evaluate_array(parse("exp(a) - exp(b)"), a=1000, b=1000, signed_overflow=True)
        assert info.value.sign == 0

    def test_integer_race_antisymmetry(self):
        node = parse("6^a*4^b*[b<a] - 6^b*4^a*[a<b]")
        for a, b in [(1, 2), (3, 1), (2, 2)]:
            assert evaluate(node, a=a, b=b) == pytest.approx(-evaluate(node, a=b, b=a), abs=TOL)
