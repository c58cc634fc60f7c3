"""Loading, validating, elaborating and checking whole programs."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx

from .ast import (
    And, Down, Fut, Imp, Monad, ModeDecl, OrderDecl, Plus, ProcDecl, ProcDef, Signature, TVar,
    TypeDef, Up, With, type_children,
)
from .checker import Checker
from .diagnostics import Diagnostic, SaxError
from .elaborate import Elaborator
from .modes import ModeTheory
from .parser import parse_program_items


@dataclass
class Program:
    path: str | None
    items: list
    all_items: list
    modes: ModeTheory
    sig: Signature
    kernel: dict = field(default_factory=dict)

    def decl(self, name: str) -> ProcDecl:
        return self.sig.decls[name]


def build(own: list, everything: list, path: str | None = None) -> Program:
    """Assemble the mode theory and signature; raises on duplicate declarations."""
    mt = ModeTheory()
    for it in everything:
        if isinstance(it, ModeDecl):
            mt.add_mode(it.name, it.structural, it.seq, it.pos)
    for it in everything:
        if isinstance(it, OrderDecl):
            mt.add_order(it.lower, it.upper, it.pos)
    mt.close()
    sig = Signature()
    dups = []
    for it in everything:
        table = {TypeDef: sig.types, ProcDecl: sig.decls, ProcDef: sig.defs}.get(type(it))
        if table is None:
            continue
        if it.name in table:
            what = {TypeDef: "type", ProcDecl: "declaration", ProcDef: "definition"}[type(it)]
            dups.append(Diagnostic("DuplicateDefinition", f"{what} {it.name} given twice", it.pos))
        else:
            table[it.name] = it
    if dups:
        raise SaxError(dups)
    return Program(path, own, everything, mt, sig)


def load(text: str, path: str | None = None) -> Program:
    own, everything = parse_program_items(text, path)
    return build(own, everything, path)


def load_file(path: str | Path) -> Program:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise SaxError(Diagnostic("IncludeError", f"cannot read {path}: {e.strerror}"))
    return load(text, str(path))


# ---------------------------------------------------------------- validation


def _check_type(prog: Program, t, mode: str, out: list, where):
    """Well-formedness of one type expected at ``mode``."""
    mt, sig = prog.modes, prog.sig
    pos = getattr(t, "pos", None) or where
    if t.mode != mode:
        out.append(Diagnostic("ModeMismatch", f"type at mode {t.mode} used where mode {mode} is expected", pos))
        return
    match t:
        case TVar(name=n):
            if n not in sig.types:
                out.append(Diagnostic("UnknownTypeVar", f"type {n} is not defined", pos))
            return
        case Plus(branches=bs) | With(branches=bs):
            labels = [l for l, _ in bs]
            if not labels:
                out.append(Diagnostic("EmptyChoice", "a choice type needs at least one label", pos))
            if len(set(labels)) != len(labels):
                out.append(Diagnostic("DuplicateLabel", "a label occurs twice in a choice type", pos))
        case Down(source=r, target=k):
            if not mt.leq(k, r):
                out.append(Diagnostic("ShiftModeViolation", f"down[{r}] at mode {k} needs {r} above {k}", pos))
        case Up(source=k, target=m):
            if not mt.leq(k, m):
                out.append(Diagnostic("ShiftModeViolation", f"up[{k}] at mode {m} needs {m} above {k}", pos))
        case Monad(body=b, mode=s):
            if not mt.leq(b.mode, s) or b.mode == s:
                out.append(Diagnostic("ShiftModeViolation", f"monad at mode {s} needs its body strictly below", pos))
            _check_type(prog, b, b.mode, out, where)
            return
        case And(left=a, right=b, mode=n) | Imp(left=a, right=b, mode=n):
            if not mt.leq(n, a.mode):
                out.append(Diagnostic("ShiftModeViolation", f"left component at mode {a.mode} must be above {n}", pos))
            _check_type(prog, a, a.mode, out, where)
            _check_type(prog, b, n, out, where)
            return
        case Fut(body=b):
            _check_type(prog, b, mode, out, where)
            return
    for c in type_children(t):
        _check_type(prog, c, c.mode if isinstance(t, (Down, Up)) else mode, out, where)


def validate(prog: Program) -> list[Diagnostic]:
    """Signature validity: modes, types, contractiveness, declarations and definitions."""
    out = list(prog.modes.check())
    sig, mt = prog.sig, prog.modes
    for td in sig.types.values():
        if td.mode not in mt.sigma:
            out.append(Diagnostic("UnknownMode", f"unknown mode {td.mode}", td.pos))
            continue
        _check_type(prog, td.body, td.mode, out, td.pos)
    g = nx.DiGraph()
    for td in sig.types.values():
        g.add_node(td.name)
        if isinstance(td.body, TVar):
            g.add_edge(td.name, td.body.name)
    looping = set()
    for cycle in nx.simple_cycles(g):
        looping |= set(cycle)
    for n in sorted(looping):
        out.append(Diagnostic("NonContractive", f"type {n} unfolds to itself without a constructor",
                              sig.types[n].pos))
    for d in sig.decls.values():
        names = [x for x, _ in d.params] + [d.result[0]]
        if len(set(names)) != len(names):
            out.append(Diagnostic("DuplicateVariable", f"{d.name} binds a variable twice", d.pos))
        for _, t in (*d.params, d.result):
            _check_type(prog, t, t.mode, out, d.pos)
        res_mode = d.result[1].mode
        for x, t in d.params:
            if t.mode in mt.sigma and res_mode in mt.sigma and not mt.leq(res_mode, t.mode):
                out.append(Diagnostic("ModeSideCondition",
                                      f"{d.name}: parameter {x} at mode {t.mode} is not above the result mode {res_mode}",
                                      d.pos))
        if d.name not in sig.defs:
            out.append(Diagnostic("MissingDefinition", f"{d.name} is declared but never defined", d.pos))
    for p in sig.defs.values():
        d = sig.decls.get(p.name)
        if d is None:
            out.append(Diagnostic("UnknownProcess", f"{p.name} is defined without a declaration", p.pos))
        elif len(d.params) != len(p.params):
            out.append(Diagnostic("ArityMismatch",
                                  f"{p.name} is declared with {len(d.params)} parameters but defined with {len(p.params)}",
                                  p.pos))
    return out


# -------------------------------------------------------- elaborate and check


def _context(decl: ProcDecl, d: ProcDef) -> dict:
    return {x: t for x, (_, t) in zip(d.params, decl.params)}


def elaborate_def(prog: Program, name: str):
    d = prog.sig.defs[name]
    decl = prog.sig.decls[name]
    el = Elaborator(prog.sig, prog.modes)
    return el.elaborate(_context(decl, d), d.body, d.dest, decl.result[1])


def _with_pos(e: SaxError, pos):
    return [dg if dg.pos is not None else Diagnostic(dg.code, dg.message, pos) for dg in e.diagnostics]


def check_program(prog: Program) -> list[Diagnostic]:
    """Validate, elaborate and check every definition; fills ``prog.kernel``."""
    out = validate(prog)
    if out:
        return out
    for name, d in prog.sig.defs.items():
        decl = prog.sig.decls[name]
        try:
            body = elaborate_def(prog, name)
        except SaxError as e:
            out += _with_pos(e, d.pos)
            continue
        prog.kernel[name] = body
        try:
            Checker(prog.sig, prog.modes).check_process(_context(decl, d), body, d.dest, decl.result[1])
        except SaxError as e:
            out += _with_pos(e, d.pos)
    return out


def check_text(text: str, path: str | None = None) -> tuple[Program | None, list[Diagnostic]]:
    """The whole front end; never raises for user errors."""
    try:
        prog = load(text, path)
    except SaxError as e:
        return None, e.diagnostics
    return prog, check_program(prog)
