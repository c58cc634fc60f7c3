import random

import pytest
from hypothesis import given, settings, strategies as st

from sax import library
from sax.ast import Addr, Label, UnitVal
from sax.runtime import Config, Engine, Filled, Scheduler, run, start
from sax.verify import (
    CorruptingEngine, MovingCopyEngine, brute_force_equiv, check_confluence, check_diamond,
    check_preservation, check_progress, check_seq_active, config_equiv, rename, small_configs,
    verify_entry,
)

from conftest import checked
from sax.encode import encode_bin


def _snapshots(name, entry, limit=8):
    prog = library.program(name)
    engine, cfg, _ = start(prog, entry)
    return small_configs(engine, cfg, Scheduler("random", 7), limit=limit)


SNAPSHOTS = [c for n, e in [("bin.sax", "main_plus2"), ("mapreduce.sax", "main"),
                             ("lambda_unr_cbn.sax", "main"), ("futures_linear.sax", "main")]
             for c in _snapshots(n, e)]


def _relabel(cfg: Config, rng: random.Random) -> Config:
    addrs = sorted(set(cfg.cells) | {b for obj in cfg.objects().values() for b in _addrs(obj)})
    ids = rng.sample(range(1000, 1000 + 4 * len(addrs) + 4), len(addrs))
    rho = {a: Addr(i, a.mode) for a, i in zip(addrs, ids)}
    out = Config()
    out.cells = {rho[a]: (None if v is None else Filled(rename(v.contents, rho), v.persistent))
                 for a, v in cfg.cells.items()}
    out.threads = {rho[a]: rename(p, rho) for a, p in cfg.threads.items()}
    out.types = {rho.get(a, a): t for a, t in cfg.types.items()}
    return out


def _addrs(obj):
    from sax.verify import addr_occurrences
    return addr_occurrences(obj)


def test_snapshots_are_small_and_varied():
    assert len(SNAPSHOTS) > 20
    assert all(len(c.cells) <= 8 for c in SNAPSHOTS)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, len(SNAPSHOTS) - 1), st.randoms(use_true_random=False))
def test_equivalence_agrees_with_brute_force(i, rng):
    c1 = SNAPSHOTS[i]
    c2 = _relabel(c1, rng)
    assert config_equiv(c1, c2) is not None
    assert brute_force_equiv(c1, c2) is not None


@settings(max_examples=150, deadline=None)
@given(st.integers(0, len(SNAPSHOTS) - 1), st.integers(0, len(SNAPSHOTS) - 1))
def test_equivalence_between_snapshots_matches_oracle(i, j):
    c1, c2 = SNAPSHOTS[i], SNAPSHOTS[j]
    assert (config_equiv(c1, c2) is None) == (brute_force_equiv(c1, c2) is None)


def test_changed_contents_are_not_equivalent():
    c1 = Config()
    a, b = Addr(0, "m"), Addr(1, "m")
    c1.cells = {a: Filled(Label("x", b), False), b: Filled(UnitVal(), False)}
    c2 = c1.copy()
    c2.cells[a] = Filled(Label("y", b), False)
    assert config_equiv(c1, c2) is None and brute_force_equiv(c1, c2) is None
    swapped = Config()
    swapped.cells = {b: Filled(Label("x", a), False), a: Filled(UnitVal(), False)}
    assert config_equiv(c1, swapped) == {a: b, b: a}


def test_roots_must_correspond():
    c = Config()
    a, b = Addr(0, "m"), Addr(1, "m")
    c.cells = {a: Filled(UnitVal(), False), b: Filled(UnitVal(), False)}
    assert config_equiv(c, c, [a], [b]) is not None
    c2 = c.copy()
    c2.cells[b] = Filled(Label("l", a), False)
    assert config_equiv(c2, c2, [a], [b]) is None


TERMINATING = [r for r in library.runs() if r.terminates]


@pytest.mark.parametrize("case", TERMINATING, ids=lambda r: f"{r.file}:{r.entry}")
def test_corpus_entry_properties(case):
    prog = library.program(case.file)
    rows = verify_entry(prog, case.file, case.entry, seeds=4, sequential=case.sequential)
    bad = [(r.prop, r.detail) for r in rows if r.ok is not True]
    assert not bad


@pytest.mark.parametrize("case", [r for r in library.runs() if not r.terminates][:3],
                         ids=lambda r: f"{r.file}:{r.entry}")
def test_divergent_entries_stay_well_typed(case):
    prog = library.program(case.file)
    engine, cfg, root = start(prog, case.entry)
    rep = check_preservation(prog, engine, cfg, Scheduler("random", 2), max_steps=400, work=None)
    assert rep.ok and rep.extra["status"] == "steplimit"


def test_preservation_without_budget_checks_every_step():
    prog = library.program("bin.sax")
    engine, cfg, _ = start(prog, "main_plus2")
    rep = check_preservation(prog, engine, cfg, Scheduler("fifo"), work=None)
    assert rep.ok and rep.extra["sampled_from"] is None


def test_preservation_sampling_is_reported():
    prog = library.program("mapreduce.sax")
    engine, cfg, _ = start(prog, "main")
    rep = check_preservation(prog, engine, cfg, Scheduler("fifo"), work=50)
    assert rep.ok and rep.extra["sampled_from"] is not None and "sampled" in rep.detail


BOTH = """
mode u unr
type bin @ u = +{b0: bin, b1: bin, e: 1}
decl both : (x : bin) |- (d : bin * bin)
proc d <- both <- x =
  a <- (a <- x) ;
  b <- case x ( b0(y) => b.b1(y) | b1(y) => b.b0(y) | e(y) => b.e(y) ) ;
  d.<a, b>
decl main : |- (d : bin * bin)
proc d <- main =
  u : 1 @ u <- u.<> ;
  x1 : bin <- x1.e(u) ;
  x : bin <- x.b1(x1) ;
  d <- both <- x
"""


def test_moving_copy_engine_breaks_confluence():
    prog = checked(BOTH)

    def make(cls):
        def go():
            _, c, root = start(prog, "main")
            return cls(prog.sig, prog.modes, prog.kernel), c, [root]
        return go

    assert check_confluence(make(Engine), [(k, k + 1) for k in range(10)]).ok
    rep = check_confluence(make(MovingCopyEngine), [(k, k + 1) for k in range(20)])
    assert not rep.ok


def test_corrupting_engine_breaks_preservation():
    prog = library.program("bin.sax")
    _, cfg, _ = start(prog, "main_plus2")
    engine = CorruptingEngine(prog.sig, prog.modes, prog.kernel, after=3)
    rep = check_preservation(prog, engine, cfg, Scheduler("fifo"), work=None)
    assert not rep.ok


def test_progress_report_flags_unfilled_roots():
    prog = library.program("bin.sax")
    engine, cfg, root = start(prog, "main_plus2")
    res = run(engine, cfg, Scheduler("fifo"), max_steps=3)
    assert not check_progress(res, [root]).ok
    res = run(engine, res.config, Scheduler("fifo"))
    assert check_progress(res, [root]).ok


def test_seq_active_negative_control():
    prog = library.program("bin.sax")
    engine, cfg, _ = start(prog, "plus2", {"z": encode_bin(1023)})
    assert not check_seq_active(engine, cfg, Scheduler("fifo")).ok
    seq = library.program("bin_seq.sax")
    engine, cfg, _ = start(seq, "plus2", {"z": encode_bin(1023)})
    assert check_seq_active(engine, cfg, Scheduler("fifo")).ok


def test_diamond_on_a_fork():
    prog = library.program("mapreduce_forkjoin.sax")
    engine, cfg, _ = start(prog, "main")
    configs = small_configs(engine, cfg, Scheduler("random", 4), limit=6)
    assert configs
    assert all(check_diamond(engine, c).ok for c in configs)
