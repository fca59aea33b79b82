import math

import pytest
from hypothesis import given, settings, strategies as st

from commfloq.expr import (BinOp, Call, Const, DomainError, ExprSyntaxError, Expression, FUNCTIONS,
                           Neg, Num, UnknownIdentifierError, Var, depends_on_t, evaluate, parse,
                           to_source)

COS2 = BinOp("^", Call("cos", Var()), Num(2.0))


def test_parse_cos_squared():
    assert parse("cos(t)^2") == COS2


def test_parse_unary_minus_binds_looser_than_power():
    assert parse("-1 - cos(t)^2") == BinOp("-", Neg(Num(1.0)), COS2)
    assert parse("-2^2") == Neg(BinOp("^", Num(2.0), Num(2.0)))


def test_power_is_right_associative():
    assert parse("2^3^2") == BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))
    assert evaluate(parse("2^3^2"), 0) == 512.0


def test_left_associative_minus_and_divide():
    assert evaluate(parse("10 - 4 - 3"), 0) == 3.0
    assert evaluate(parse("8 / 4 / 2"), 0) == 1.0


def test_implicit_multiplication_rejected_at_offset_1():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("2t")
    assert exc.value.offset == 1


@pytest.mark.parametrize("src, offset", [("", 0), ("1 +", 3), ("(t", 2), ("sin t", 4),
                                         ("t )", 2), ("3 $ 4", 2)])
def test_syntax_error_offsets(src, offset):
    with pytest.raises(ExprSyntaxError) as exc:
        parse(src)
    assert exc.value.offset == offset


def test_error_carries_expected_set():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("1 +")
    assert "number" in exc.value.expected


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse("x + 1")
    with pytest.raises(UnknownIdentifierError):
        parse("log(t)")


def test_non_ascii_input_is_a_located_error():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("t+é".encode())
    assert exc.value.offset == 2
    with pytest.raises(ExprSyntaxError):
        parse(b"\xff\xfe")


def test_evaluate_cos_squared_at_zero():
    assert evaluate(parse("cos(t)^2"), 0.0) == 1.0


def test_evaluate_erfi_one():
    # frozen: erfi(1) = 2/sqrt(pi) int_0^1 exp(s^2) ds, mpmath 30 digits
    assert evaluate(parse("erfi(t)"), 1.0) == pytest.approx(1.650425758797542876, rel=1e-14)


@pytest.mark.parametrize("t, expected", [(0.5, 0.6149520946965110), (2.0, 18.564802414575553),
                                         (3.0, 1629.9946226015657), (-1.2, -2.4159129708991163)])
def test_evaluate_erfi_frozen(t, expected):
    assert Expression.parse("erfi(t)")(t) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("src, t", [("1/t", 0.0), ("ln(t)", 0.0), ("sqrt(t)", -1.0),
                                    ("(-1)^0.5", 0.0), ("0^(-1)", 0.0), ("exp(t)", 1000.0),
                                    ("10^t", 400.0)])
def test_domain_errors(src, t):
    with pytest.raises(DomainError) as exc:
        evaluate(parse(src), t)
    assert exc.value.node is not None


def test_constants_and_functions():
    assert evaluate(parse("pi"), 0) == math.pi
    assert evaluate(parse("e"), 0) == math.e
    assert evaluate(parse("abs(-t)"), 2.5) == 2.5
    assert evaluate(parse("1.5e-3 * 2E2"), 0) == pytest.approx(0.3)
    assert evaluate(parse(".5"), 0) == 0.5


def test_depends_on_t():
    assert depends_on_t(parse("sin(2*t)"))
    assert not depends_on_t(parse("sin(pi/2) + e"))
    assert Expression.parse("3*pi").is_constant


def test_nesting_limit_is_a_syntax_error():
    with pytest.raises(ExprSyntaxError):
        parse("(" * 5000 + "t" + ")" * 5000)
    with pytest.raises(ExprSyntaxError):
        parse("-" * 5000 + "t")


def test_long_flat_chain_parses():
    node = parse(" + ".join(["t"] * 150))
    assert evaluate(node, 1.0) == 150.0


# --- properties ------------------------------------------------------------

def ast_strategy():
    leaves = st.one_of(
        st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
        st.just(Var()),
        st.sampled_from([Const("pi"), Const("e")]),
    )

    def extend(children):
        return st.one_of(
            children.map(Neg),
            st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda x: BinOp(*x)),
            st.tuples(st.sampled_from(sorted(FUNCTIONS)), children).map(lambda x: Call(*x)),
        )
    return st.recursive(leaves, extend, max_leaves=25)


@settings(max_examples=500, deadline=None)
@given(ast_strategy())
def test_print_parse_roundtrip(tree):
    text = to_source(tree)
    assert parse(text) == tree
    assert parse(to_source(parse(text))) == parse(text)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_pythagorean_identity(t):
    v = evaluate(parse("sin(t)^2 + cos(t)^2"), t)
    assert abs(v - 1) <= 1e-14


@settings(max_examples=300, deadline=None)
@given(st.floats(-20, 20, allow_nan=False))
def test_erfi_is_odd(t):
    e = Expression.parse("erfi(t)")
    try:
        a = e(t)
    except DomainError:
        return
    b = e(-t)
    assert a == -b
    assert math.copysign(1, a) == -math.copysign(1, b) or a == 0


@settings(max_examples=2000, deadline=None)
@given(st.binary(max_size=60))
def test_parser_total_on_bytes(data):
    try:
        node = parse(data)
    except ExprSyntaxError as exc:
        assert isinstance(exc.offset, int) and exc.offset >= 0
        return
    try:
        evaluate(node, 0.5)
    except DomainError:
        pass


@settings(max_examples=2000, deadline=None)
@given(st.text(alphabet="t0123456789.eE+-*/^() sincoxpqrtlabfhi", max_size=40))
def test_parser_total_on_near_grammar_text(text):
    try:
        node = parse(text)
    except ExprSyntaxError:
        return
    try:
        evaluate(node, 1.3)
    except DomainError:
        pass
