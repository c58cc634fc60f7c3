import pytest
from hypothesis import given, settings, strategies as st

from sax import library
from sax.ast import (
    Addr, AtomIdWrite, AtomValWrite, Branches, Case, Cut, Id, Label, PairMatch, Shift, ShiftMatch,
    TVar, UnitMatch, UnitVal, Write, Pair,
)
from sax.diagnostics import SaxError
from sax.encode import decode_bin, encode_bin, encode_tree
from sax.runtime import (
    Config, Engine, Filled, Scheduler, blocked_on, build, decode, is_complete, pass_value, replay, run,
    show_tree, start,
)

from conftest import checked, execute

BIN = library.program("bin.sax")


def test_pass_value_rows():
    body = Id("x", "y'")
    k = Branches((("b0", "y'", Id("x", "q")), ("b1", "y'", body), ("e", "y'", Id("x", "r"))))
    c2 = Addr(2, "m")
    assert pass_value(Label("b1", c2), k) == Id("x", c2)
    assert pass_value(UnitVal(), UnitMatch(body)) is body
    assert pass_value(Shift(c2), ShiftMatch("y'", body)) == Id("x", c2)
    assert pass_value(Pair(c2, Addr(3, "m")), PairMatch("y'", "z", Id("x", "z"))) == Id("x", Addr(3, "m"))
    with pytest.raises(SaxError) as e:
        pass_value(UnitVal(), k)
    assert e.value.code == "ShapeMismatch"


def _config_with_thread(prog, p, ty):
    cfg = Config()
    c = cfg.alloc(ty)
    cfg.cells[c] = None
    cfg.threads[c] = p
    return Engine(prog.sig, prog.modes, prog.kernel), cfg, c


def test_cut_step_allocates_and_spawns():
    bin_t = BIN.sig.decls["succ"].result[1]
    e, cfg, c = _config_with_thread(BIN, Cut("x", "m", Write("x", UnitVal()), Id("c", "x"), TVar("bin", "m")), bin_t)
    assert blocked_on(cfg, c, cfg.threads[c]) is None
    st_, again = e.step(cfg, c)
    a = Addr(1, "m")
    assert st_.rule == "cut" and st_.produce == (a, c)
    assert cfg.cells[a] is None and cfg.threads[a] == Write(a, UnitVal())
    assert cfg.threads[c] == Id("c", a)


def test_read_of_empty_cell_blocks():
    bin_t = BIN.sig.decls["succ"].result[1]
    e, cfg, c = _config_with_thread(BIN, Id(None, Addr(9, "m")), bin_t)
    assert blocked_on(cfg, c, cfg.threads[c]) == Addr(9, "m")
    cfg.threads[c] = AtomIdWrite(c, "x", Addr(9, "m"))
    assert blocked_on(cfg, c, cfg.threads[c]) == Addr(9, "m")


def test_identity_moves_ephemeral_cell():
    bin_t = BIN.sig.decls["succ"].result[1]
    e, cfg, d = _config_with_thread(BIN, None, bin_t)
    src = cfg.alloc(bin_t)
    cfg.cells[src] = Filled(Label("e", Addr(7, "m")), False)
    cfg.threads[d] = Id(d, src)
    e.step(cfg, d)
    assert src not in cfg.cells and cfg.cells[d].contents == Label("e", Addr(7, "m"))


def test_identity_copies_persistent_cell():
    prog = checked("mode u unr\ntype t @ u = +{a: 1}\n")
    t = TVar("t", "u")
    e, cfg, d = _config_with_thread(prog, None, t)
    src = cfg.alloc(t)
    cfg.cells[src] = Filled(Label("a", Addr(7, "u")), True)
    cfg.threads[d] = Id(d, src)
    e.step(cfg, d)
    assert cfg.cells[src].contents == cfg.cells[d].contents


def test_atomic_value_write():
    prog = checked("mode m lin\ntype t @ m = 1\n")
    outer_t = TVar("t", "m")
    e, cfg, c = _config_with_thread(prog, AtomValWrite(None, "x", UnitVal(), TVar("t", "m")), outer_t)
    cfg.threads[c] = AtomValWrite(c, "x", UnitVal(), TVar("t", "m"))
    st_, _ = e.step(cfg, c)
    a = st_.produce[0]
    assert cfg.cells[a].contents == UnitVal() and cfg.cells[c].contents == Shift(a)
    assert not cfg.threads


@pytest.mark.parametrize("policy,seed", [("fifo", None), ("lifo", None), ("random", 0), ("random", 99)])
def test_succ_of_six(policy, seed):
    res, tree = execute(BIN, "succ", {"y": encode_bin(6)}, policy, seed)
    assert res.status == "done" and decode_bin(tree) == 7


def test_zero_step_limit():
    res, _ = execute(BIN, "succ", {"y": encode_bin(6)}, max_steps=0)
    assert res.status == "steplimit" and res.steps == 0


def test_read_of_never_written_cell_is_stuck():
    bin_t = BIN.sig.decls["succ"].result[1]
    e, cfg, c = _config_with_thread(BIN, None, bin_t)
    hole = cfg.alloc(bin_t)
    cfg.cells[hole] = None
    cfg.threads[c] = Case(hole, Branches((("e", "u", Id(c, "u")),)))
    cfg.threads[hole] = Case(c, Branches((("e", "u", Id(hole, "u")),)))
    res = run(e, cfg, Scheduler("fifo"))
    assert res.status == "stuck" and res.blocked == sorted([c, hole])


def test_random_policy_needs_seed():
    with pytest.raises(ValueError):
        Scheduler("random")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**16), st.integers(0, 2**32))
def test_same_seed_same_trace(n, seed):
    a, _ = execute(BIN, "plus2", {"z": encode_bin(n)}, "random", seed, record=True)
    b, _ = execute(BIN, "plus2", {"z": encode_bin(n)}, "random", seed, record=True)
    assert a.trace == b.trace


def _structural(cfg: Config):
    for a in cfg.threads:
        assert a in cfg.cells and cfg.cells[a] is None
    for a, c in cfg.cells.items():
        if c is None:
            assert a in cfg.threads


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**10), st.integers(0, 1000))
def test_structural_invariant_and_replay(n, seed):
    engine, cfg, root = start(BIN, "plus2", {"z": encode_bin(n)})
    init = cfg.copy()
    seen = []

    def observe(c, ready):
        _structural(c)
        seen.append(len(ready))

    res = run(engine, cfg, Scheduler("random", seed), observe=observe)
    _structural(res.config)
    again = replay(engine, init, res.trace)
    assert again.cells == res.config.cells and again.threads == res.config.threads


def test_persistent_cells_survive_reads():
    prog = library.program("lambda_unr_cbn.sax")
    engine, cfg, root = start(prog, "main")
    filled = {}
    lost = []

    def observe(c, ready):
        for a, v in filled.items():
            if a not in c.cells:
                lost.append(a)
        for a, v in c.cells.items():
            if v is not None and v.persistent:
                filled[a] = v

    res = run(engine, cfg, Scheduler("random", 3), observe=observe)
    assert res.status == "done" and filled and not lost


def test_ephemeral_cells_are_consumed_by_their_read():
    engine, cfg, root = start(BIN, "succ", {"y": encode_bin(6)})
    y = Addr(0, "m")
    assert cfg.cells[y] is not None and not cfg.cells[y].persistent
    res = run(engine, cfg, Scheduler("fifo"))
    assert res.status == "done" and y not in res.config.cells


def test_trace_format():
    res, _ = execute(BIN, "main_plus2", record=True)
    line = res.trace[0].format(0)
    assert line.startswith("#0 call consume=[a0@m] produce=[a0@m]")


def test_decode_six_and_partial():
    engine, cfg, _ = start(BIN, "succ", {"y": encode_bin(6)})
    six = Addr(0, "m")
    assert show_tree(decode(cfg, six)) == "b0(b1(b1(e(<>))))"
    assert decode(cfg, Addr(99, "m")) == ("partial", Addr(99, "m"))
    assert not is_complete(decode(cfg, Addr(99, "m")))


def test_decode_tree():
    prog = library.program("mapreduce.sax")
    tree_t = prog.sig.decls["sum"].params[0][1]
    engine = Engine(prog.sig, prog.modes, prog.kernel)
    cfg = Config()
    shape = ((None, 1, None), 2, (None, 3, None))
    root = build(engine, cfg, tree_t, encode_tree(shape))
    assert decode(cfg, root) == encode_tree(shape)
    assert show_tree(decode(cfg, root)).startswith("node(<node(<empty(<>), <suc(zero(<>)), empty(<>)>>)")
