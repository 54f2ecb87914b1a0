import itertools

import pytest
from hypothesis import given, settings, strategies as st

from modlat import formula as fm
from modlat.errors import ParseError

P1, P2, P3 = fm.Var(1), fm.Var(2), fm.Var(3)


@pytest.mark.parametrize("text, tree", [
    ("<>1 & !<>0", fm.And(fm.Dia(fm.ONE), fm.Not(fm.Dia(fm.ZERO)))),
    ("p1", P1),
    ("<>p1 <-> p1", fm.Iff(fm.Dia(P1), P1)),
    ("p1 -> p2 -> p1", fm.Imp(P1, fm.Imp(P2, P1))),
    ("p1 & p2 & p3", fm.And(fm.And(P1, P2), P3)),
    ("p1 + p2 & p3", fm.Or(P1, fm.And(P2, P3))),
    ("p1 <-> p2 + p3", fm.Iff(P1, fm.Or(P2, P3))),
    ("!<>[]p1", fm.Not(fm.Dia(fm.Box(P1)))),
    ("(p1 -> p2) -> p1", fm.Imp(fm.Imp(P1, P2), P1)),
    ("  p12  ", fm.Var(12)),
])
def test_parse_examples(text, tree):
    assert fm.parse(text) == tree


@pytest.mark.parametrize("tree, text", [
    (fm.And(fm.Dia(fm.ONE), fm.Not(fm.Dia(fm.ZERO))), "<>1 & !<>0"),
    (P2, "p2"),
    (fm.Imp(P1, fm.Imp(P2, P1)), "p1 -> p2 -> p1"),
    (fm.Imp(fm.Imp(P1, P2), P1), "(p1 -> p2) -> p1"),
    (fm.And(P1, fm.And(P2, P3)), "p1 & (p2 & p3)"),
    (fm.Not(fm.Or(P1, P2)), "!(p1 + p2)"),
    (fm.Iff(fm.Iff(P1, P2), P3), "p1 <-> p2 <-> p3"),
])
def test_print_examples(tree, text):
    assert fm.to_text(tree) == text
    assert fm.parse(text) == tree


@pytest.mark.parametrize("text, pos", [
    ("p0", 0), ("p1 &", 4), ("(p1", 3), ("p1 p2", 3), ("p1 $ p2", 3), ("", 0), ("<>", 2),
])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as info:
        fm.parse(text)
    assert info.value.pos == pos


def test_parse_error_is_value_error():
    with pytest.raises(ValueError):
        fm.parse("p1 -> ")


@pytest.mark.parametrize("text, degree", [
    ("p1 & !p2 + p2", 0),
    ("([]p1 <-> []<>p1) -> <>[]p1", 2),
    ("0", 0),
    ("<>(p1 & <>p2) + [][]<>1", 3),
])
def test_modal_degree(text, degree):
    assert fm.modal_degree(fm.parse(text)) == degree


def test_max_var():
    assert fm.max_var(fm.parse("p3 & <>p7 + 1")) == 7
    assert fm.max_var(fm.ONE) == 0


@pytest.mark.parametrize("text, assignment, value", [
    ("p1 + !p1", (0,), True),
    ("p1 + !p1", (1,), True),
    ("p1 & p2", (1, 0), False),
    ("p1 <-> p2 + p3", (1, 1, 0), True),
    ("p1 -> p2 -> p1", (0, 1), True),
])
def test_bool_eval(text, assignment, value):
    assert fm.bool_eval(fm.parse(text), assignment) is value


def test_bool_eval_matches_truth_table():
    f = fm.parse("(p1 -> p2) <-> !p3 + p1 & p2")
    for a in itertools.product((0, 1), repeat=3):
        p1, p2, p3 = a
        want = ((not p1) or p2) == ((not p3) or (p1 and p2))
        assert fm.bool_eval(f, a) is bool(want)


def test_bool_eval_rejects_modal_formulas():
    with pytest.raises(Exception):
        fm.bool_eval(fm.parse("<>p1"), (1,))


def test_substitute_vars():
    f = fm.parse("<>p1 & p2")
    g = fm.substitute_vars(f, {1: fm.parse("!p2"), 2: fm.ZERO})
    assert fm.to_text(g) == "<>!p2 & 0"


def test_long_chains_do_not_overflow_the_stack():
    f = fm.conj([fm.Var(1 + i % 3) for i in range(20000)])
    text = fm.to_text(f)
    # structural == on such trees would itself recurse; compare printed forms
    assert fm.to_text(fm.parse(text)) == text
    assert fm.modal_degree(f) == 0
    deep = P1
    for _ in range(400):
        deep = fm.Dia(deep)
    assert fm.modal_degree(deep) == 400
    assert fm.to_text(fm.parse(fm.to_text(deep))) == "<>" * 400 + "p1"


def _formulas():
    leaves = st.one_of(st.sampled_from([fm.ZERO, fm.ONE]),
                       st.integers(1, 4).map(fm.Var))

    def extend(children):
        unary = st.tuples(st.sampled_from(fm.UNARY), children).map(lambda t: t[0](t[1]))
        binary = st.tuples(st.sampled_from(fm.BINARY), children, children).map(
            lambda t: t[0](t[1], t[2]))
        return st.one_of(unary, binary)

    return st.recursive(leaves, extend, max_leaves=25)


@settings(max_examples=300, deadline=None)
@given(_formulas())
def test_print_parse_round_trip(f):
    assert fm.parse(fm.to_text(f)) == f


@settings(max_examples=100, deadline=None)
@given(_formulas())
def test_degree_of_diamond(f):
    assert fm.modal_degree(fm.Dia(f)) == fm.modal_degree(f) + 1
