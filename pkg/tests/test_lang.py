import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awhile.lang import (
    ARead,
    Asgn,
    AWrite,
    BinOp,
    BoolLit,
    Cmp,
    CTCond,
    If,
    Num,
    ParseError,
    Seq,
    Skip,
    SKIP,
    Var,
    While,
    eval_aexp,
    eval_bexp,
    parse_aexp,
    parse_bexp,
    parse_com,
    pretty_aexp,
    pretty_com,
    used_vars,
)
from awhile.state import ScalarState

LISTING1 = "if i < a1_size then j <- a1[i]; x <- a2[j] end"

LISTING2 = """
if i < a1_size then
  b := (i < a1_size ? b : 1);
  j <- a1[(b = 1 ? 0 : i)];
  x <- a2[(b = 1 ? 0 : j)]
else
  b := (i < a1_size ? 1 : b)
end
"""


# --- strategies -------------------------------------------------------------

scalar_names = st.sampled_from(["x", "y", "z", "i"])
array_names = st.sampled_from(["a", "c"])


def aexps(depth=3):
    base = st.one_of(
        st.integers(min_value=0, max_value=9).map(Num),
        scalar_names.map(Var),
    )
    return st.recursive(
        base,
        lambda inner: st.one_of(
            st.tuples(st.sampled_from("+-*"), inner, inner).map(
                lambda t: BinOp(*t)
            ),
            st.tuples(bexps_shallow(inner), inner, inner).map(
                lambda t: CTCond(*t)
            ),
        ),
        max_leaves=depth * 2,
    )


def bexps_shallow(inner_aexp):
    from awhile.lang import And, Not, Or

    comparisons = st.tuples(
        st.sampled_from(["=", "<>", "<=", "<"]), inner_aexp, inner_aexp
    ).map(lambda t: Cmp(*t))
    base = st.one_of(st.booleans().map(BoolLit), comparisons)
    return st.recursive(
        base,
        lambda b: st.one_of(
            b.map(Not),
            st.tuples(b, b).map(lambda t: And(*t)),
            st.tuples(b, b).map(lambda t: Or(*t)),
        ),
        max_leaves=4,
    )


def bexps():
    return bexps_shallow(aexps(2))


def _rseq(first, second):
    # the grammar right-associates ';', so generated trees must too
    if isinstance(first, Seq):
        return Seq(first.first, _rseq(first.second, second))
    return Seq(first, second)


def coms():
    leaves = st.one_of(
        st.just(SKIP),
        st.tuples(scalar_names, aexps(2)).map(lambda t: Asgn(*t)),
        st.tuples(scalar_names, array_names, aexps(2)).map(lambda t: ARead(*t)),
        st.tuples(array_names, aexps(2), aexps(2)).map(lambda t: AWrite(*t)),
    )
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda t: _rseq(*t)),
            st.tuples(bexps(), inner, inner).map(lambda t: If(*t)),
            st.tuples(bexps(), inner).map(lambda t: While(*t)),
        ),
        max_leaves=8,
    )


# --- parsing ----------------------------------------------------------------


def test_parse_skip():
    assert parse_com("skip") == SKIP


def test_parse_listing1():
    assert parse_com(LISTING1) == If(
        Cmp("<", Var("i"), Var("a1_size")),
        Seq(ARead("j", "a1", Var("i")), ARead("x", "a2", Var("j"))),
        SKIP,
    )


def test_parse_incomplete_if():
    with pytest.raises(ParseError):
        parse_com("if x then")


def test_parse_error_has_position():
    with pytest.raises(ParseError) as err:
        parse_com("skip;\n  ?")
    assert err.value.line == 2
    assert err.value.col == 3


def test_seq_right_associates():
    assert parse_com("skip; x := 1; skip") == Seq(
        SKIP, Seq(Asgn("x", Num(1)), SKIP)
    )


def test_if_without_else_desugars_to_skip():
    com = parse_com("if true then x := 1 end")
    assert com.other == SKIP


def test_mul_binds_tighter_than_add():
    assert parse_aexp("1 + 2 * 3") == BinOp(
        "+", Num(1), BinOp("*", Num(2), Num(3))
    )


def test_subtraction_left_associates():
    e = parse_aexp("1 - 2 - 1")
    assert e == BinOp("-", BinOp("-", Num(1), Num(2)), Num(1))


def test_parenthesized_comparison_operand():
    b = parse_bexp("(x + 1) < 2")
    assert b == Cmp("<", BinOp("+", Var("x"), Num(1)), Num(2))


def test_ctcond_as_comparison_operand():
    b = parse_bexp("(x < 1 ? 2 : 3) < 4")
    assert b == Cmp("<", CTCond(Cmp("<", Var("x"), Num(1)), Num(2), Num(3)), Num(4))


def test_whitespace_insensitive():
    one_line = "if i < a1_size then j <- a1[i]; x <- a2[j] end"
    multi = "if i < a1_size\nthen\n  j <- a1[ i ];\n  x <- a2[j]\nend"
    assert parse_com(one_line) == parse_com(multi)


def test_name_used_as_scalar_and_array_rejected():
    with pytest.raises(ParseError, match="both scalar and array"):
        parse_com("a[0] <- 1; a := 2")
    with pytest.raises(ParseError, match="both scalar and array"):
        parse_com("x := a; x <- a[0]")


def test_keywords_reserved():
    with pytest.raises(ParseError):
        parse_com("end := 1")


# --- pretty printing --------------------------------------------------------


def test_pretty_skip():
    assert pretty_com(SKIP) == "skip"


def _squash(text: str) -> str:
    return " ".join(text.split())


def test_listing2_round_trips_modulo_whitespace():
    ast = parse_com(LISTING2)
    assert _squash(pretty_com(ast)) == _squash(LISTING2)
    assert parse_com(pretty_com(ast)) == ast


def test_ctcond_in_binop_parenthesized():
    e = BinOp("+", CTCond(BoolLit(True), Num(1), Num(2)), Num(3))
    text = pretty_aexp(e)
    assert parse_aexp(text) == e


@settings(max_examples=300)
@given(coms())
def test_round_trip(com):
    assert parse_com(pretty_com(com)) == com


# --- evaluation -------------------------------------------------------------


def test_eval_addition():
    assert eval_aexp(ScalarState(), parse_aexp("3 + 4")) == 7


def test_eval_truncated_subtraction():
    rho = ScalarState({"x": 3})
    assert eval_aexp(rho, parse_aexp("x - 5")) == 0


def test_eval_ctcond():
    rho = ScalarState({"x": 1})
    assert eval_aexp(rho, parse_aexp("(x < 2 ? 8 : 9)")) == 8


def test_eval_bool_literal():
    assert eval_bexp(ScalarState(), BoolLit(True)) is True


def test_eval_branch_conditions_of_bounds_check():
    b = parse_bexp("i < a1_size")
    assert eval_bexp(ScalarState({"i": 4, "a1_size": 4}), b) is False
    assert eval_bexp(ScalarState({"i": 1, "a1_size": 4}), b) is True


@settings(max_examples=200)
@given(aexps(), st.dictionaries(scalar_names, st.integers(0, 50)))
def test_eval_total(e, env):
    assert eval_aexp(ScalarState(env), e) >= 0


@settings(max_examples=200)
@given(aexps(2), aexps(2), st.dictionaries(scalar_names, st.integers(0, 50)))
def test_truncation(e1, e2, env):
    rho = ScalarState(env)
    v1, v2 = eval_aexp(rho, e1), eval_aexp(rho, e2)
    assert eval_aexp(rho, BinOp("-", e1, e2)) == max(0, v1 - v2)


# --- used_vars --------------------------------------------------------------


def _oracle_vars(com) -> set:
    """Independent traversal with an explicit worklist."""
    out, work = set(), [com]
    while work:
        node = work.pop()
        if isinstance(node, (Num, BoolLit, Skip)):
            continue
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, BinOp):
            work += [node.left, node.right]
        elif isinstance(node, CTCond):
            work += [node.cond, node.then, node.other]
        elif isinstance(node, Cmp):
            work += [node.left, node.right]
        elif node.__class__.__name__ == "Not":
            work.append(node.arg)
        elif node.__class__.__name__ in ("And", "Or"):
            work += [node.left, node.right]
        elif isinstance(node, Asgn):
            out.add(node.name)
            work.append(node.expr)
        elif isinstance(node, Seq):
            work += [node.first, node.second]
        elif isinstance(node, If):
            work += [node.cond, node.then, node.other]
        elif isinstance(node, While):
            work += [node.cond, node.body]
        elif isinstance(node, ARead):
            out.add(node.name)
            work.append(node.index)
        elif isinstance(node, AWrite):
            work += [node.index, node.value]
    return out


def test_used_vars_skip():
    assert used_vars(SKIP) == frozenset()


def test_used_vars_listing1_matches_oracle():
    com = parse_com(LISTING1)
    assert used_vars(com) == _oracle_vars(com) == {"i", "a1_size", "j", "x"}


def test_used_vars_includes_assignment_target():
    assert used_vars(Asgn("b", Num(0))) == {"b"}


@settings(max_examples=200)
@given(coms())
def test_used_vars_matches_oracle(com):
    assert used_vars(com) == _oracle_vars(com)
