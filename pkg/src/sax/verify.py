"""Executable checks of the metatheory: preservation, progress, confluence.

Configurations are compared up to a renaming of addresses.  Colour
refinement over the graph of address references splits the addresses into
classes that any renaming must respect; candidate renamings are drawn from
those classes and each one is checked exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields, is_dataclass, replace

from .ast import Addr, Id, Label, UnitVal, Write
from .checker import check_configuration
from .diagnostics import SaxError
from .runtime import (
    DEFAULT_MAX_STEPS, Config, Engine, Filled, RunResult, Scheduler, blocked_on, rule_name, run,
)
from .typeeq import types_equal


# ---------------------------------------------------------------- renaming

_FIELDS: dict[type, tuple[str, ...]] = {}


def _fields_of(cls) -> tuple[str, ...]:
    names = _FIELDS.get(cls)
    if names is None:
        names = _FIELDS[cls] = tuple(f.name for f in fields(cls) if f.name != "pos")
    return names


def _children(node):
    if isinstance(node, tuple):
        return node
    if is_dataclass(node) and not isinstance(node, type):
        return tuple(getattr(node, n) for n in _fields_of(type(node)))
    return ()


def addr_occurrences(node, out=None) -> list:
    """Addresses in a tree, in order of first occurrence."""
    if out is None:
        out = []
    seen = set(out)
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Addr):
            if n not in seen:
                seen.add(n)
                out.append(n)
        elif not isinstance(n, str):
            stack.extend(reversed(_children(n)))
    return out


def rename(node, rho):
    """Apply an address renaming (a dict or a function) anywhere inside a tree."""
    if isinstance(node, Addr):
        return rho(node) if callable(rho) else rho.get(node, node)
    if isinstance(node, str) or node is None:
        return node
    if isinstance(node, tuple):
        return tuple(rename(n, rho) for n in node)
    if is_dataclass(node) and not isinstance(node, type):
        changes = {}
        for name in _fields_of(type(node)):
            v = getattr(node, name)
            if isinstance(v, (str, int)) or v is None:
                continue
            nv = rename(v, rho)
            if nv is not v:
                changes[name] = nv
        if changes:
            return replace(node, **changes)
    return node


def _objects(cfg: Config) -> dict:
    return cfg.objects()


def _renamed_objects(cfg: Config, rho: dict) -> dict:
    return {rho[a]: (k, rename(b, rho)) for a, (k, b) in _objects(cfg).items()}


def _blank(a: Addr) -> Addr:
    return Addr(-1, a.mode)


def colours(cfg: Config, roots=()) -> dict:
    """Colour refinement of the address graph.

    Addresses of isomorphic configurations receive the same colours; the
    converse holds in all but highly symmetric cases, which is why every
    renaming built from colours is checked before it is trusted.
    """
    objs = _objects(cfg)
    addrs = addr_occurrences((tuple(roots), tuple(objs.items())))
    occ = {a: [b for b in addr_occurrences(objs[a]) if b != a] if a in objs else [] for a in addrs}
    preds: dict[Addr, list] = {a: [] for a in addrs}
    for a in addrs:
        for i, b in enumerate(occ[a]):
            preds[b].append((a, i))
    root_index = {r: i for i, r in enumerate(roots)}
    col = {}
    for a in addrs:
        if a in objs:
            kind, body = objs[a]
            col[a] = hash((kind, repr(rename(body, _blank)), root_index.get(a)))
        else:
            col[a] = hash(("free", a.mode, root_index.get(a)))
    distinct = len(set(col.values()))
    while True:
        col = {a: hash((col[a], tuple(col[b] for b in occ[a]),
                        tuple(sorted((col[p], i) for p, i in preds[a])))) for a in addrs}
        now = len(set(col.values()))
        if now == distinct:
            return col
        distinct = now


def canonical(cfg: Config, roots=()) -> tuple[tuple, dict]:
    """Sorted colours and a numbering of addresses consistent with them."""
    col = colours(cfg, roots)
    order = sorted(col, key=lambda a: (col[a], a.id))
    rho = {a: Addr(i, a.mode) for i, a in enumerate(order)}
    return tuple(sorted(col.values())), rho


def config_equiv(c1: Config, c2: Config, roots1=(), roots2=(), budget: int = 5040) -> dict | None:
    """A renaming of addresses taking ``c1`` onto ``c2`` (and roots onto roots), or None."""
    if len(c1.cells) != len(c2.cells) or len(c1.threads) != len(c2.threads):
        return None
    k1, k2 = colours(c1, roots1), colours(c2, roots2)
    if sorted(k1.values()) != sorted(k2.values()):
        return None
    classes1: dict[int, list] = {}
    classes2: dict[int, list] = {}
    for a in sorted(k1, key=lambda a: a.id):
        classes1.setdefault(k1[a], []).append(a)
    for a in sorted(k2, key=lambda a: a.id):
        classes2.setdefault(k2[a], []).append(a)
    target = _objects(c2)
    # first try pairing each colour class in allocation order, then a
    # bounded search over the ambiguous classes
    keys = [k for k in classes1 if len(classes1[k]) > 1]
    base = {a: classes2[k][0] for k, v in classes1.items() if len(v) == 1 for a in v}
    choices = [itertools.permutations(classes2[k]) for k in keys]
    for n, combo in enumerate(itertools.product(*choices)):
        if n >= budget:
            return None
        rho = dict(base)
        for k, perm in zip(keys, combo):
            rho.update(zip(classes1[k], perm))
        if all(rho.get(r1) == r2 for r1, r2 in zip(roots1, roots2)) and _renamed_objects(c1, rho) == target:
            return rho
    return None


def brute_force_equiv(c1: Config, c2: Config) -> dict | None:
    """Search all mode-preserving bijections; only for tiny configurations."""
    o1, o2 = _objects(c1), _objects(c2)
    a1 = addr_occurrences(tuple(o1.items()))
    a2 = addr_occurrences(tuple(o2.items()))
    if len(a1) != len(a2) or sorted(a.mode for a in a1) != sorted(a.mode for a in a2):
        return None
    for perm in itertools.permutations(a2):
        if any(x.mode != y.mode for x, y in zip(a1, perm)):
            continue
        rho = dict(zip(a1, perm))
        if _renamed_objects(c1, rho) == o2:
            return rho
    return None


# ------------------------------------------------------------ preservation


@dataclass
class Report:
    ok: bool
    detail: str = ""
    step: int | None = None
    extra: dict = field(default_factory=dict)


def type_config(prog, cfg: Config, inputs: dict | None = None) -> dict:
    return check_configuration(prog.sig, prog.modes, inputs or {}, cfg.objects(), cfg.types)


def _contains(prog, new: dict, old: dict) -> str | None:
    for a, t in old.items():
        if a not in new:
            return f"{a} is no longer offered"
        if not types_equal(prog.sig, new[a], t):
            return f"{a} changed type"
    return None


def check_preservation(prog, engine: Engine, cfg: Config, sched: Scheduler,
                       max_steps: int = DEFAULT_MAX_STEPS, work: int | None = 200_000) -> Report:
    """Run ``cfg``, typing the whole configuration before the first and after every step.

    Each typing must offer at least the addresses of the one before it,
    at the same types. Retyping costs time proportional to the configuration,
    so once ``work`` objects have been typed in total the check continues only
    at power-of-two steps and at the end.  ``work=None`` checks every step.
    """
    state = {"delta": None, "step": 0, "fail": None, "work": 0, "sampled_from": None}

    def retype(c):
        try:
            new = type_config(prog, c)
        except SaxError as e:
            d = e.diagnostics[0]
            return f"{d.code}: {d.message}"
        if state["delta"] is not None:
            problem = _contains(prog, new, state["delta"])
            if problem:
                return problem
        state["delta"] = new
        return None

    class _Stop(Exception):
        pass

    def observe(c, ready):
        n = state["step"]
        if work is not None and state["work"] > work:
            if state["sampled_from"] is None:
                state["sampled_from"] = n
            if n & (n - 1):
                state["step"] += 1
                return
        if state["fail"] is None:
            state["work"] += len(c.cells) + len(c.threads)
            problem = retype(c)
            if problem:
                state["fail"] = problem
                raise _Stop
        state["step"] += 1

    try:
        res = run(engine, cfg, sched, max_steps, observe=observe, record=False)
    except _Stop:
        return Report(False, state["fail"], state["step"] - 1 if state["step"] else 0)
    except SaxError as e:
        return Report(False, f"runtime error: {e.diagnostics[0].message}", state["step"])
    problem = retype(res.config)
    if problem:
        return Report(False, problem, res.steps)
    detail = f"{res.steps} steps"
    if state["sampled_from"] is not None:
        detail += f", sampled after step {state['sampled_from']}"
    return Report(True, detail, extra={"steps": res.steps, "status": res.status,
                                       "sampled_from": state["sampled_from"]})


def check_preservation_trace(prog, engine: Engine, cfg0: Config, trace: list) -> Report:
    """Replay a recorded trace from a copy of ``cfg0``, retyping after every step."""
    cfg = cfg0.copy()
    try:
        delta = type_config(prog, cfg)
    except SaxError as e:
        return Report(False, f"initial configuration: {e.diagnostics[0].message}", 0)
    for n, st in enumerate(trace):
        engine.step(cfg, st.actor)
        try:
            new = type_config(prog, cfg)
        except SaxError as e:
            d = e.diagnostics[0]
            return Report(False, f"{d.code}: {d.message}", n)
        problem = _contains(prog, new, delta)
        if problem:
            return Report(False, problem, n)
        delta = new
    return Report(True, f"{len(trace)} steps")


def check_progress(result: RunResult, offered) -> Report:
    if result.status == "steplimit":
        return Report(False, "run hit the step limit; progress not evaluated")
    cells = result.config.cells
    unfilled = [a for a in offered if cells.get(a) is None]
    if unfilled or result.config.threads:
        return Report(False, "unfilled: " + ", ".join(map(str, unfilled or result.blocked)),
                      extra={"unfilled": unfilled, "threads": sorted(result.config.threads)})
    return Report(True)


# -------------------------------------------------------------- confluence


def check_confluence(make, seed_pairs, max_steps=1_000_000) -> Report:
    """Run to completion under paired seeds and compare final configurations.

    ``make()`` returns a fresh ``(engine, config, roots)`` triple.
    """
    for s1, s2 in seed_pairs:
        e1, c1, roots1 = make()
        e2, c2, roots2 = make()
        r1 = run(e1, c1, Scheduler("random", s1), max_steps)
        r2 = run(e2, c2, Scheduler("random", s2), max_steps)
        if r1.status != "done" or r2.status != "done":
            return Report(False, f"seeds {s1}/{s2}: status {r1.status}/{r2.status}",
                          extra={"traces": (r1.trace, r2.trace)})
        if config_equiv(r1.config, r2.config, roots1, roots2) is None:
            return Report(False, f"seeds {s1}/{s2}: final configurations differ",
                          extra={"traces": (r1.trace, r2.trace)})
    return Report(True, f"{len(seed_pairs)} seed pairs")


def enabled(cfg: Config) -> list[Addr]:
    return sorted(a for a, p in cfg.threads.items() if blocked_on(cfg, a, p) is None)


def check_diamond(engine: Engine, cfg: Config) -> Report:
    """Every two distinct single steps can be joined by one more step each."""
    ready = enabled(cfg)
    for t1, t2 in itertools.combinations(ready, 2):
        c1, c2 = cfg.copy(), cfg.copy()
        engine.step(c1, t1)
        engine.step(c2, t2)
        if config_equiv(c1, c2) is not None:
            continue
        if t2 not in enabled(c1) or t1 not in enabled(c2):
            return Report(False, f"steps of {t1} and {t2} disable each other")
        engine.step(c1, t2)
        engine.step(c2, t1)
        if config_equiv(c1, c2) is None:
            return Report(False, f"steps of {t1} and {t2} do not commute")
    return Report(True)


# ------------------------------------------------------------ sequentiality


def active_threads(cfg: Config, ready) -> list:
    """Threads that can step and do more than store a continuation."""
    return [a for a in ready if rule_name(a, cfg.threads[a]) != "write-cont"]


def check_seq_active(engine: Engine, cfg: Config, sched: Scheduler, max_steps=1_000_000) -> Report:
    worst = {"n": 0, "step": None}
    count = [0]

    def observe(c, ready):
        k = len(active_threads(c, ready))
        if k > worst["n"]:
            worst["n"], worst["step"] = k, count[0]
        count[0] += 1

    try:
        res = run(engine, cfg, sched, max_steps, observe=observe, record=False)
    except SaxError as e:
        return Report(False, f"runtime error: {e.diagnostics[0].message}", count[0])
    if worst["n"] > 1:
        return Report(False, f"{worst['n']} active threads before step {worst['step']}", worst["step"],
                      extra={"status": res.status})
    return Report(True, f"{res.steps} steps", extra={"status": res.status})


# ------------------------------------------------------------------ suites


@dataclass
class Row:
    program: str
    entry: str
    prop: str
    runs: int
    ok: bool | None  # None when the property does not apply
    detail: str = ""

    @property
    def result(self) -> str:
        return {True: "ok", False: "FAIL", None: "n/a"}[self.ok]


def small_configs(engine: Engine, cfg: Config, sched: Scheduler, limit: int = 6,
                  max_steps: int = 10_000) -> list[Config]:
    """Configurations with at most ``limit`` objects met along one run."""
    found = []

    def observe(c, ready):
        if len(c.cells) <= limit:
            found.append(c.copy())

    run(engine, cfg, sched, max_steps, observe=observe, record=False)
    return found


def verify_entry(prog, name: str, entry: str, *, seeds: int = 25, max_steps: int = 100_000,
                 engine_cls=Engine, sequential: bool = False, diamonds: bool = True,
                 preservation_steps: int = 5_000) -> list[Row]:
    """Preservation, progress, confluence, diamonds and (optionally) seq-active for one entry."""
    from .runtime import start

    def make():
        _, c, root = start(prog, entry, {})
        return engine_cls(prog.sig, prog.modes, prog.kernel), c, [root]

    rows = []
    e, c, roots = make()
    pres = check_preservation(prog, e, c, Scheduler("random", 0), min(max_steps, preservation_steps))
    rows.append(Row(name, entry, "preservation", 1, pres.ok, pres.detail))

    statuses = []
    progress_fail = None
    for seed in range(seeds):
        e, c, roots = make()
        try:
            res = run(e, c, Scheduler("random", seed), max_steps, record=False)
        except SaxError as err:
            progress_fail = f"seed {seed}: {err.diagnostics[0].message}"
            break
        statuses.append(res.status)
        if res.status != "steplimit":
            rep = check_progress(res, roots)
            if not rep.ok and progress_fail is None:
                progress_fail = f"seed {seed}: {rep.detail}"
    terminating = bool(statuses) and all(st != "steplimit" for st in statuses)
    if progress_fail is not None:
        rows.append(Row(name, entry, "progress", len(statuses), False, progress_fail))
    elif not terminating:
        rows.append(Row(name, entry, "progress", len(statuses), None, "hit the step limit"))
    else:
        rows.append(Row(name, entry, "progress", len(statuses), True))

    if terminating and progress_fail is None:
        try:
            conf = check_confluence(make, [(k, k + 1000) for k in range(seeds)], max_steps)
        except SaxError as err:
            conf = Report(False, err.diagnostics[0].message)
        rows.append(Row(name, entry, "confluence", seeds, conf.ok, conf.detail))
    else:
        rows.append(Row(name, entry, "confluence", 0, None if progress_fail is None else False,
                        "needs a terminating run"))

    if diamonds:
        e, c, _ = make()
        try:
            configs = small_configs(e, c, Scheduler("random", 1), max_steps=min(max_steps, 10_000))
        except SaxError as err:
            rows.append(Row(name, entry, "diamond", 0, False, err.diagnostics[0].message))
            configs = None
        if configs is not None:
            bad = None
            for k in configs:
                try:
                    rep = check_diamond(e, k)
                except SaxError as err:
                    rep = Report(False, err.diagnostics[0].message)
                if not rep.ok:
                    bad = rep.detail
                    break
            rows.append(Row(name, entry, "diamond", len(configs), bad is None, bad or ""))

    if sequential:
        e, c, _ = make()
        rep = check_seq_active(e, c, Scheduler("random", 0), min(max_steps, 20_000))
        rows.append(Row(name, entry, "seq-active", 1, rep.ok, rep.detail))
    return rows


# ---------------------------------------------------------- fault injection


class MovingCopyEngine(Engine):
    """An engine whose identity rule moves persistent cells instead of copying them."""

    def step(self, cfg: Config, c: Addr):
        p = cfg.threads[c]
        if isinstance(p, Id) and self.persistent(p.src) and p.src in cfg.cells:
            cfg.cells[p.src] = Filled(cfg.cells[p.src].contents, False)
        return super().step(cfg, c)


class CorruptingEngine(Engine):
    """An engine that, once, stores a unit where a labelled value was written."""

    def __init__(self, sig, mt, kernel, after: int = 0):
        super().__init__(sig, mt, kernel)
        self.countdown = after

    def _fill(self, cfg: Config, a: Addr, contents):
        if isinstance(contents, Label):
            if self.countdown == 0:
                contents = UnitVal()
            self.countdown -= 1
        super()._fill(cfg, a, contents)


