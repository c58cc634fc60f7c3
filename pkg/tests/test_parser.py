import pytest
from hypothesis import given, settings, strategies as st

from sax import library
from sax.ast import (
    And, Arrow, Call, Cut, Down, Fut, Id, Imp, Label, Lolli, Monad, One, Pair, Par, PatCont, Plus,
    SeqCut, ShortCut, TVar, Tensor, UnitVal, Up, With, Write,
)
from sax.diagnostics import SaxError
from sax.parser import lex, parse, parse_process_text
from sax.printer import show_items, show_proc, show_type

from strategies import processes

CORPUS = library.program_files() + [m["file"] for m in library.mutants()]


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trip(name):
    path = str(library.path_of(name))
    items = parse(library.path_of(name).read_text(), path).items
    again = parse(show_items(items), path).items
    assert again == items


@settings(max_examples=500, deadline=None)
@given(processes())
def test_process_round_trip(p):
    assert parse_process_text(show_proc(p)) == p


def test_comments_and_arrows():
    toks = [t.text for t in lex("x <= p ; % hi\n y <~ q <- z")]
    assert "<=" in toks and "<~" in toks and "hi" not in toks


def test_shorthand_forms():
    p = parse_process_text("x' <- y' ; z <- x'")
    assert p == ShortCut("x'", "<-", Id("x'", "y'"), Id("z", "x'"))
    p = parse_process_text("x' <= succ <- y' ; z <- x'")
    assert p == ShortCut("x'", "<=", Call("x'", "succ", ("y'",)), Id("z", "x'"))


def test_explicit_cuts():
    assert parse_process_text("x <- (x <- y) ; z <- x") == Cut("x", None, Id("x", "y"), Id("z", "x"))
    assert parse_process_text("x <= (x.<>) ; z <- x") == SeqCut("x", Write("x", UnitVal()), Id("z", "x"))


def test_zero_argument_call():
    assert parse_process_text("x <- p <-") == Call("x", "p", ())


def test_nested_values_and_patterns():
    w = parse_process_text("x.b1(e(<>))")
    assert w == Write("x", Label("b1", Label("e", UnitVal())))
    c = parse_process_text("case t (empty(<>) => s <- z | node(<l, <x, r>>) => s <- l)")
    assert isinstance(c.cont, PatCont)
    assert c.cont.arms[1][0] == Label("node", Pair("l", Pair("x", "r")))


def test_pair_first_component_must_be_a_name():
    with pytest.raises(SaxError) as e:
        parse_process_text("x.<a(y), z>")
    assert e.value.code == "SyntaxError"


@pytest.mark.parametrize("src", ["x <- ", "case x ( a(y) => )", "x.", "proc", "x <- y ;"])
def test_syntax_errors(src):
    with pytest.raises(SaxError) as e:
        parse_process_text(src)
    assert e.value.code == "SyntaxError"


HEADER = "mode m lin\nmode u unr\norder m < u\ntype nat @ m = +{zero: 1, suc: nat}\ntype unat @ u = +{z: 1, s: unat}\n"


def _typedef(src):
    items = parse(HEADER + f"type t @ m = {src}\n").items
    return items[-1].body


def test_type_modes_are_resolved():
    t = _typedef("down[u] unat * nat -o 1")
    assert t == Lolli(Tensor(Down("u", "m", TVar("unat", "u")), TVar("nat", "m"), "m"), One("m"), "m")
    assert _typedef("up[m] nat") == Up("m", "m", TVar("nat", "m"))
    assert _typedef("unat /\\ nat") == And(TVar("unat", "u"), TVar("nat", "m"), "m")
    assert _typedef("fut nat") == Fut(TVar("nat", "m"), "m")


def test_type_operators_precedence():
    t = _typedef("nat * nat -o nat")
    assert isinstance(t, Lolli) and isinstance(t.arg, Tensor)
    t = _typedef("nat -> nat -> nat")
    assert isinstance(t, Arrow) and isinstance(t.result, Arrow)


def _mtypes():
    m_leaf = st.sampled_from([One("m"), TVar("nat", "m")])
    u_leaf = st.sampled_from([One("u"), TVar("unat", "u")])
    lbl = st.sampled_from(["a", "b", "c"])

    def grow_at(mode, inner, other):
        br = st.dictionaries(lbl, inner, min_size=1, max_size=3).map(lambda d: tuple(d.items()))
        out = [
            br.map(lambda b: Plus(b, mode)),
            br.map(lambda b: With(b, mode)),
            st.tuples(inner, inner).map(lambda p: Tensor(p[0], p[1], mode)),
            st.tuples(inner, inner).map(lambda p: Lolli(p[0], p[1], mode)),
            st.tuples(inner, inner).map(lambda p: Arrow(p[0], p[1], mode)),
            st.tuples(inner, inner).map(lambda p: Par(p[0], p[1], mode)),
            inner.map(lambda b: Fut(b, mode)),
        ]
        if mode == "m":
            out += [other.map(lambda b: Down("u", "m", b)),
                    inner.map(lambda b: Up("m", "m", b)),
                    st.tuples(other, inner).map(lambda p: And(p[0], p[1], "m")),
                    st.tuples(other, inner).map(lambda p: Imp(p[0], p[1], "m"))]
        else:
            out += [other.map(lambda b: Up("m", "u", b)), other.map(lambda b: Monad(b, "u"))]
        return st.one_of(out)

    u_types = st.recursive(u_leaf, lambda inner: grow_at("u", inner, m_leaf), max_leaves=4)
    return st.recursive(m_leaf, lambda inner: grow_at("m", inner, u_types), max_leaves=6)


@settings(max_examples=300, deadline=None)
@given(_mtypes())
def test_type_round_trip(t):
    assert _typedef(show_type(t)) == t
