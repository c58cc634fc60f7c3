import pytest
from hypothesis import given, settings, strategies as st

from sax import library
from sax.ast import (
    AtomContWrite, AtomIdWrite, AtomValWrite, Call, Case, Cut, Down, Id, Label, PairMatch, ShiftMatch,
    TVar, UnitVal, Write, is_kernel,
)
from sax.diagnostics import SaxError
from sax.elaborate import (
    expand_pattern_case, expand_shorthands, expand_value_seq, percent_subst, seqcut_kernel, slash_subst,
)
from sax.encode import decode_bin, decode_nat, encode_bin
from sax.parser import parse_process_text as proc
from sax.recheck import RULES, recheck

from conftest import checked, codes, execute

BIN = TVar("bin", "m")


def test_shorthands():
    assert expand_shorthands(proc("x' <- y' ; z <- x'")) == proc("x' <- (x' <- y') ; z <- x'")
    assert expand_shorthands(proc("x' <- succ <- y' ; z <- x'")) == proc("x' <- (x' <- succ <- y') ; z <- x'")
    kernel = proc("x <- (x <- y) ; case x (b0(z) => w <- z)")
    assert expand_shorthands(kernel) == kernel


def test_positive_value_sequence():
    w = proc("x.b1(e(y'))")
    out = expand_value_seq(w, True, {"x", "y'"})
    assert isinstance(out, Cut)
    assert out.left == Write(out.var, Label("e", "y'"))
    assert out.right == Write("x", Label("b1", out.var))


def test_negative_value_sequence():
    w = proc("f.shift(<p, s'>)")
    out = expand_value_seq(w, False, {"f", "p", "s'"})
    assert out == Cut(out.var, None, proc(f"f.shift({out.var})"), proc(f"{out.var}.<p, s'>"))


def test_base_value_is_unchanged():
    w = proc("x.b1(y)")
    assert expand_value_seq(w, True, {"x", "y"}) is w


def test_pattern_cascade():
    c = proc("case t (empty(<>) => s <- z | node(<l, <x, r>>) => s <- l)")
    out = expand_pattern_case(c, {"t", "s", "z", "l", "x", "r"})
    (_, e, e_body), (_, n, n_body) = out.cont.arms
    assert e_body == Case(e, proc("case q (<> => s <- z)").cont)
    assert n_body.subject == n
    second = expand_pattern_case(n_body, {"t", "s", "z", "l", "x", "r", e, n})
    assert isinstance(second.cont, PairMatch) and second.cont.first == "l"
    third = expand_pattern_case(second.cont.body, {"t", "s", "z", "l", "x", "r", e, n})
    assert third.cont == PairMatch("x", "r", proc("s <- l"))


def test_flat_continuation_is_unchanged():
    c = proc("case y (b0(z) => x <- z | e(u) => x <- u)")
    assert expand_pattern_case(c, set()) is c


def test_overlapping_labels():
    with pytest.raises(SaxError) as e:
        expand_pattern_case(proc("case t (a(<>) => x <- y | a(b(z)) => x <- z)"), set())
    assert e.value.code == "OverlappingLabels"


def test_slash_substitution_rows():
    avoid = {"x", "x'", "y", "z"}
    assert slash_subst(proc("x.b1(y)"), "x", "x'", BIN, avoid) == AtomValWrite("x'", "x", Label("b1", "y"), BIN)
    k = proc("case x (b0(y) => z <- y)").cont
    assert slash_subst(proc("case x (b0(y) => z <- y)"), "x", "x'", BIN, avoid) == AtomContWrite("x'", "x", k, BIN)
    assert slash_subst(proc("x <- y"), "x", "x'", BIN, avoid) == AtomIdWrite("x'", "x", "y", BIN)


def test_slash_substitution_wraps_calls():
    out = slash_subst(proc("x <- succ <- y"), "x", "x'", BIN, {"x", "x'", "y"})
    assert isinstance(out, Cut) and out.origin == "seq"
    assert out.left == Call(out.var, "succ", ("y",))
    assert out.right == AtomIdWrite("x'", "x", out.var, BIN)


def test_sequential_cut_expansion():
    out = seqcut_kernel("x'", BIN, proc("x' <- y'"), proc("x.b1(x')"), {"x", "x'", "y'"})
    assert out.ty == Down("m", "m", BIN) and out.origin == "seq"
    assert out.left == AtomIdWrite(out.var, "x'", "y'", BIN)
    assert out.right == Case(out.var, ShiftMatch("x'", proc("x.b1(x')")))


def test_percent_read_forms():
    prog = checked("mode m lin\ntype bin @ m = +{b0: bin, b1: bin, e: 1}\n")
    avoid = {"x", "x'", "y", "z", "u"}
    force = proc("x'.shift(x)")
    for src in ["y.b0(x)", "case x (b0(z) => y <- z | b1(z) => y <- z | e(u) => y.e(u))", "y <- x"]:
        q = proc(src)
        out = percent_subst(prog.sig, q, "x", "x'", BIN, avoid)
        if src.startswith("y.b0"):
            # x is passed along, not read: it is handed over through a sequential cut
            assert isinstance(out, Cut) and out.origin == "seq"
        else:
            assert out == Cut("x", "m", force, q, BIN, "cbn")


def test_percent_leaves_unrelated_process():
    prog = checked("mode m lin\ntype bin @ m = +{b0: bin, b1: bin, e: 1}\n")
    q = proc("y <- z")
    assert percent_subst(prog.sig, q, "x", "x'", BIN, {"x", "x'", "y", "z"}) is q


SUCC = """
mode m lin {seq}
type bin @ m = +{{b0: bin, b1: bin, e: 1}}

decl succ : (y : bin) |- (x : bin)
proc x <- succ <- y =
  case y ( b0(y') => x.b1(y')
         | b1(y') => x' <= succ <- y' ;
                     x.b0(x')
         | e(<>) => x.b1(e(<>)) )
"""


def test_sequential_cut_around_call_matches_manual_expansion():
    prog = checked(SUCC.format(seq="") + """
decl viacall : (y : bin) |- (x : bin)
proc x <- viacall <- y =
  z <= succ <- y ;
  x <- z

decl manual : (y : bin) |- (x : bin)
proc x <- manual <- y =
  z' : down[m] bin @ m <- (z0 : bin <- (z0 <- succ <- y) ;
                           z'.shift(z <- z0)) ;
  case z' (shift(z) => x <- z)
""")
    for n in [0, 1, 6, 11, 255]:
        a = execute(prog, "viacall", {"y": encode_bin(n)})[1]
        b = execute(prog, "manual", {"y": encode_bin(n)})[1]
        assert decode_bin(a) == decode_bin(b) == n + 1


def test_cbn_argument_never_used_never_runs():
    prog = checked("""
mode m unr seq
type nat @ m = +{zero: 1, suc: nat}
decl loop : |- (x : nat)
proc x <- loop = x <- loop <-
decl main : |- (x : nat)
proc x <- main =
  y <~ loop <- ;
  x.zero(<>)
""")
    res, tree = execute(prog, "main", max_steps=10_000)
    assert res.status == "done"
    assert decode_nat(tree) == 0


def test_identity_function_applied_to_unit():
    prog = checked("""
mode m lin seq
type u @ m = 1
decl ident : |- (f : u -> u)
proc f <- ident = f.(fn x => * <- x)
decl unit : |- (y : u)
proc y <- unit = y.<>
decl main : |- (y : u)
proc y <- main = y <- (* <- ident <-)(* <- unit <-)
""")
    res, tree = execute(prog, "main")
    assert res.status == "done" and tree == ("unit",)


def test_lambda_and_parallel_pair_shapes(corpus):
    prog = checked("""
mode m lin
type u @ m = 1
decl ident : |- (f : u -> u)
proc f <- ident = f.(fn x => * <- x)
decl both : |- (z : u || u)
proc z <- both = z.<* <- ident2 <- | * <- ident2 <->
decl ident2 : |- (y : u)
proc y <- ident2 = y.<>
decl split : (x : u || u) |- (y : u)
proc y <- split <- x = case x (<a | b> => case a (<> => y <- b))
""")
    assert isinstance(prog.kernel["ident"], Case) and isinstance(prog.kernel["ident"].cont, PairMatch)
    assert isinstance(prog.kernel["split"].cont, PairMatch)
    assert isinstance(prog.kernel["both"], Cut)


def test_future_then_touch_equals_sequential_cut():
    prog = checked(SUCC.format(seq="seq") + """
decl viafuture : (y : bin) |- (x : bin)
proc x <- viafuture <- y =
  f <= f.(future (* <- succ <- y)) ;
  touch f (<z> => x <- z)

decl plain : (y : bin) |- (x : bin)
proc x <- plain <- y =
  z <= succ <- y ;
  x <- z
""")
    for n in [0, 3, 100]:
        assert decode_bin(execute(prog, "viafuture", {"y": encode_bin(n)})[1]) == n + 1
        assert decode_bin(execute(prog, "plain", {"y": encode_bin(n)})[1]) == n + 1


def test_touch_on_unfulfilled_future_hits_step_limit():
    prog = checked("""
mode m lin seq
type nat @ m = +{zero: 1, suc: nat}
decl loop : |- (x : nat)
proc x <- loop = x <- loop <-
decl main : |- (x : nat)
proc x <- main =
  f <= f.(future (* <- loop <-)) ;
  touch f (<z> => x <- z)
""")
    res, _ = execute(prog, "main", max_steps=2_000)
    assert res.status == "steplimit"


def test_monad_bind_and_and_write():
    res, tree = execute(library.program("counter.sax"), "main", {"n": ("label", "suc", ("label", "suc", (
        "label", "suc", ("label", "zero", ("unit",)))))})
    assert res.status == "done"
    assert decode_bin(tree[1][1]) == 3


@pytest.mark.parametrize("name", library.program_files())
def test_corpus_kernels_are_kernel_only(name):
    prog = library.program(name)
    assert prog.kernel and all(is_kernel(p) for p in prog.kernel.values())


def test_user_names_that_look_fresh_are_not_captured():
    prog = checked("""
mode m lin
type bin @ m = +{b0: bin, b1: bin, e: 1}
decl f : (x_1 : bin) |- (x : bin)
proc x <- f <- x_1 = x.b1(b0(x_1))
""")
    res, tree = execute(prog, "f", {"x_1": encode_bin(1)})
    assert decode_bin(tree) == 0b101


def test_monad_outside_its_discipline():
    assert "ShiftModeViolation" in codes("""
mode n lin
mode s unr
order n < s
type t @ n = 1
type bad @ n = {t}
""")


@pytest.mark.parametrize("rule", RULES)
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_recheck(rule, seed):
    inst = recheck(rule, seed)
    assert inst.ok, inst.text + "\n" + "\n".join(map(str, inst.diagnostics))
