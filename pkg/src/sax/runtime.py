"""Multiset-rewriting execution of kernel configurations.

A configuration holds running threads (each paired with the empty cell it
will fill), filled cells and the type of every allocated address.  Threads
blocked on an empty cell are parked on that address and woken by the write
that fills it, so choosing the next redex never scans the whole
configuration.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .ast import (
    Addr, AtomContWrite, AtomIdWrite, AtomValWrite, Branches, Call, Case, Cut, Id, Label, Pair,
    PairMatch, Shift, ShiftMatch, UnitMatch, UnitVal, Write, One, Plus, Tensor, Down,
    substitute, substitute_cont,
)
from .diagnostics import Diagnostic, SaxError
from .typeeq import expand_head

DEFAULT_MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class Filled:
    contents: object  # a base value or a continuation
    persistent: bool


@dataclass
class Config:
    threads: dict = field(default_factory=dict)  # Addr -> Process
    cells: dict = field(default_factory=dict)  # Addr -> Filled | None (empty)
    types: dict = field(default_factory=dict)  # Addr -> Type
    next_id: int = 0

    def alloc(self, ty) -> Addr:
        a = Addr(self.next_id, ty.mode)
        self.next_id += 1
        self.types[a] = ty
        return a

    def copy(self) -> "Config":
        return Config(dict(self.threads), dict(self.cells), dict(self.types), self.next_id)

    def objects(self) -> dict:
        """Every semantic object keyed by its address, in the checker's format."""
        out = {}
        for a, c in self.cells.items():
            if c is None:
                out[a] = ("thread", self.threads[a])
            elif isinstance(c.contents, (Label, Pair, UnitVal, Shift)):
                out[a] = ("value", c.contents)
            else:
                out[a] = ("cont", c.contents)
        return out


@dataclass(frozen=True)
class Step:
    rule: str
    actor: Addr
    consume: tuple
    produce: tuple

    def format(self, n: int) -> str:
        c = ",".join(map(str, self.consume))
        p = ",".join(map(str, self.produce))
        return f"#{n} {self.rule} consume=[{c}] produce=[{p}]"


@dataclass
class RunResult:
    config: Config
    trace: list
    status: str  # done | steplimit | stuck
    steps: int
    blocked: list = field(default_factory=list)


def pass_value(v, k):
    """Hand a stored or sent value to a continuation."""
    match (v, k):
        case (Label(label=l, arg=d), Branches()):
            arm = k.arm(l)
            if arm is None:
                raise SaxError(Diagnostic("ShapeMismatch", f"no branch for label {l}"))
            y, body = arm
            return substitute(body, {y: d})
        case (Pair(first=e, second=c), PairMatch(first=w, second=y, body=body)):
            return substitute(body, {w: e, y: c})
        case (UnitVal(), UnitMatch(body=body)):
            return body
        case (Shift(arg=d), ShiftMatch(var=y, body=body)):
            return substitute(body, {y: d})
    raise SaxError(Diagnostic("ShapeMismatch", f"cannot pass {type(v).__name__} to {type(k).__name__}"))


# ----------------------------------------------------------------- scheduler


class Scheduler:
    """A ready pool whose removal order is fixed by the policy."""

    def __init__(self, policy: str = "fifo", seed: int | None = None):
        if policy not in ("fifo", "lifo", "random"):
            raise ValueError(f"unknown scheduling policy {policy}")
        if policy == "random" and seed is None:
            raise ValueError("the random policy needs a seed")
        self.policy = policy
        self.seed = seed
        # Python's random.Random is MT19937, so a seed gives the same schedule everywhere.
        self.rng = random.Random(seed) if policy == "random" else None
        self.pool: deque | list = deque() if policy == "fifo" else []
        self.members: set = set()

    def add(self, a):
        if a not in self.members:
            self.members.add(a)
            self.pool.append(a)

    def pop(self):
        if self.policy == "fifo":
            a = self.pool.popleft()
        elif self.policy == "lifo":
            a = self.pool.pop()
        else:
            i = int(self.rng.random() * len(self.pool))
            self.pool[i], self.pool[-1] = self.pool[-1], self.pool[i]
            a = self.pool.pop()
        self.members.discard(a)
        return a

    def __len__(self):
        return len(self.pool)

    def snapshot(self) -> list:
        return list(self.pool)


# -------------------------------------------------------------------- engine


def blocked_on(cfg: Config, c: Addr, p):
    """The address a thread waits for, or None when it can step now."""
    match p:
        case Id(src=s) | AtomIdWrite(src=s):
            pass
        case Write(subject=s) | Case(subject=s):
            if s == c:
                return None
        case _:
            return None
    return None if cfg.cells.get(s) is not None else s


RULES = {
    Cut: "cut", Call: "call", Id: "id", AtomValWrite: "atom-val",
    AtomContWrite: "atom-cont", AtomIdWrite: "atom-id",
}


def rule_name(c: Addr, p) -> str:
    if isinstance(p, Write):
        return "write" if p.subject == c else "send"
    if isinstance(p, Case):
        return "write-cont" if p.subject == c else "read"
    return RULES[type(p)]


class Engine:
    def __init__(self, sig, mt, kernel: dict):
        self.sig = sig
        self.mt = mt
        self.kernel = kernel

    def persistent(self, a: Addr) -> bool:
        return self.mt.contractible(a.mode)

    def _take(self, cfg: Config, s: Addr):
        cell = cfg.cells[s]
        if not cell.persistent:
            del cfg.cells[s]
            cfg.types.pop(s, None)
            return cell.contents, (s,)
        return cell.contents, ()

    def _fill(self, cfg: Config, a: Addr, contents):
        cfg.cells[a] = Filled(contents, self.persistent(a))

    def _inner_type(self, cfg, c, p):
        if p.inner_ty is not None:
            return p.inner_ty
        return expand_head(self.sig, cfg.types[c]).body

    def step(self, cfg: Config, c: Addr) -> tuple[Step, list]:
        """Fire the redex of thread ``c``.  Returns the step and the threads to reschedule."""
        p = cfg.threads[c]
        rule = rule_name(c, p)
        match p:
            case Cut(var=x, left=left, right=right):
                a = cfg.alloc(p.ty)
                cfg.cells[a] = None
                cfg.threads[a] = substitute(left, {x: a})
                cfg.threads[c] = substitute(right, {x: a})
                return Step(rule, c, (c,), (a, c)), [a, c]
            case Call(proc=f, args=args):
                d = self.sig.defs[f]
                body = self.kernel[f]
                cfg.threads[c] = substitute(body, {d.dest: c, **dict(zip(d.params, args))})
                return Step(rule, c, (c,), (c,)), [c]
            case Id(src=s):
                w, gone = self._take(cfg, s)
                del cfg.threads[c]
                self._fill(cfg, c, w)
                return Step(rule, c, (c, *gone), (c,)), []
            case Write(subject=s, value=v) if s == c:
                del cfg.threads[c]
                self._fill(cfg, c, v)
                return Step(rule, c, (c,), (c,)), []
            case Write(subject=s, value=v):
                k, gone = self._take(cfg, s)
                cfg.threads[c] = pass_value(v, k)
                return Step(rule, c, (c, *gone), (c,)), [c]
            case Case(subject=s, cont=k) if s == c:
                del cfg.threads[c]
                self._fill(cfg, c, k)
                return Step(rule, c, (c,), (c,)), []
            case Case(subject=s, cont=k):
                v, gone = self._take(cfg, s)
                cfg.threads[c] = pass_value(v, k)
                return Step(rule, c, (c, *gone), (c,)), [c]
            case AtomValWrite(inner=i, value=v) | AtomContWrite(inner=i, cont=v) | AtomIdWrite(inner=i, src=v):
                a = cfg.alloc(self._inner_type(cfg, c, p))
                gone = ()
                if isinstance(p, AtomValWrite):
                    contents = v
                elif isinstance(p, AtomContWrite):
                    contents = substitute_cont(v, {i: a})
                else:
                    contents, gone = self._take(cfg, v)
                del cfg.threads[c]
                self._fill(cfg, a, contents)
                self._fill(cfg, c, Shift(a))
                return Step(rule, c, (c, *gone), (a, c)), []
        raise SaxError(Diagnostic("ShapeMismatch", f"thread {c} is not running a kernel process"))


def run(engine: Engine, cfg: Config, sched: Scheduler, max_steps: int = DEFAULT_MAX_STEPS,
        observe: Callable | None = None, record: bool = True) -> RunResult:
    """Step until nothing is enabled or the step budget is spent.

    ``observe(cfg, ready)`` is called before every step with the list of
    threads that could fire.
    """
    waiting: dict[Addr, list] = {}
    trace = []

    def schedule(a):
        if a not in cfg.threads:
            return
        b = blocked_on(cfg, a, cfg.threads[a])
        if b is None:
            sched.add(a)
        else:
            waiting.setdefault(b, []).append(a)

    for a in sorted(cfg.threads):
        schedule(a)
    steps = 0
    while len(sched) and steps < max_steps:
        if observe is not None:
            observe(cfg, sched.snapshot())
        c = sched.pop()
        b = blocked_on(cfg, c, cfg.threads[c])
        if b is not None:
            # only a faulty engine can disable a ready thread
            waiting.setdefault(b, []).append(c)
            continue
        st, again = engine.step(cfg, c)
        steps += 1
        if record:
            trace.append(st)
        for a in again:
            schedule(a)
        for a in st.produce:
            if cfg.cells.get(a) is not None:
                for w in waiting.pop(a, ()):
                    schedule(w)
    if not cfg.threads:
        status = "done"
    elif len(sched):
        status = "steplimit"
    else:
        status = "stuck"
    blocked = sorted(a for a in cfg.threads) if status == "stuck" else []
    return RunResult(cfg, trace, status, steps, blocked)


def replay(engine: Engine, cfg: Config, trace: list) -> Config:
    """Apply the steps of a trace, in order, to ``cfg`` (in place)."""
    for st in trace:
        engine.step(cfg, st.actor)
    return cfg


# ----------------------------------------------------------- building inputs


def build(engine: Engine, cfg: Config, ty, tree) -> Addr:
    """Write a value tree of type ``ty`` into fresh filled cells; returns the root."""
    h = expand_head(engine.sig, ty)
    a = cfg.alloc(ty)
    match (tree[0], h):
        case ("label", Plus()):
            _, l, sub = tree
            b = build(engine, cfg, dict(h.branches)[l], sub)
            contents = Label(l, b)
        case ("pair", Tensor()):
            x = build(engine, cfg, h.left, tree[1])
            y = build(engine, cfg, h.right, tree[2])
            contents = Pair(x, y)
        case ("unit", One()):
            contents = UnitVal()
        case ("shift", Down()):
            contents = Shift(build(engine, cfg, h.body, tree[1]))
        case _:
            raise ValueError(f"cannot build {tree[0]} at a {type(h).__name__} type")
    engine._fill(cfg, a, contents)
    return a


def decode(cfg: Config, root: Addr, limit: int = 1_000_000):
    """Read the value rooted at ``root`` back into a tree of tuples."""
    budget = [limit]

    def go(a, seen):
        budget[0] -= 1
        if budget[0] < 0 or a in seen:
            return ("partial", a)
        cell = cfg.cells.get(a)
        if cell is None:
            return ("partial", a)
        v = cell.contents
        seen = seen | {a}
        match v:
            case Label(label=l, arg=d):
                return ("label", l, go(d, seen))
            case Pair(first=x, second=y):
                return ("pair", go(x, seen), go(y, seen))
            case UnitVal():
                return ("unit",)
            case Shift(arg=d):
                return ("shift", go(d, seen))
        return ("cont", v)

    return go(root, frozenset())


def is_complete(tree) -> bool:
    if tree[0] == "partial":
        return False
    return all(is_complete(t) for t in tree[1:] if isinstance(t, tuple))


def show_tree(tree) -> str:
    match tree:
        case ("label", l, sub):
            return f"{l}({show_tree(sub)})"
        case ("pair", a, b):
            return f"<{show_tree(a)}, {show_tree(b)}>"
        case ("unit",):
            return "<>"
        case ("shift", sub):
            return f"shift({show_tree(sub)})"
        case ("cont", *_):
            return "<continuation>"
        case ("partial", a):
            return f"?{a}"
    raise ValueError(tree)


# ------------------------------------------------------------------ programs


def start(prog, entry: str, inputs: dict | None = None) -> tuple[Engine, Config, Addr]:
    """Create the initial configuration running ``entry``.

    ``inputs`` maps parameter names to value trees, which are written into
    memory before the entry thread starts.
    """
    if entry not in prog.sig.decls:
        raise SaxError(Diagnostic("UnknownProcess", f"process {entry} is not declared"))
    if entry not in prog.kernel:
        raise SaxError(Diagnostic("UnknownProcess", f"process {entry} has not been checked"))
    engine = Engine(prog.sig, prog.modes, prog.kernel)
    cfg = Config()
    decl = prog.sig.decls[entry]
    d = prog.sig.defs[entry]
    inputs = inputs or {}
    missing = [x for x, _ in decl.params if x not in inputs]
    if missing:
        raise SaxError(Diagnostic("ArityMismatch", f"no input given for {', '.join(missing)}"))
    args = {}
    for (x, t), y in zip(decl.params, d.params):
        args[y] = build(engine, cfg, t, inputs[x])
    root = cfg.alloc(decl.result[1])
    cfg.cells[root] = None
    cfg.threads[root] = Call(root, entry, tuple(args[y] for y in d.params))
    return engine, cfg, root
