"""Abstract syntax: types, values, continuations, processes and their sugar.

Every node is an immutable dataclass.  Source positions ride along in a
``pos`` field that takes no part in equality or hashing, so structural
comparison of two trees ignores where they came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from .diagnostics import Pos

STAR = "*"


def _pos():
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True, order=True)
class Addr:
    """A runtime address: a unique ordinal plus the mode of the cell."""

    id: int
    mode: str

    def __str__(self) -> str:
        return f"a{self.id}@{self.mode}"


Name = Union[str, Addr]


# --------------------------------------------------------------------- types


@dataclass(frozen=True)
class Plus:
    branches: tuple[tuple[str, "Type"], ...]
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class With:
    branches: tuple[tuple[str, "Type"], ...]
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Tensor:
    left: "Type"
    right: "Type"
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class One:
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Lolli:
    arg: "Type"
    result: "Type"
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Down:
    """Type at ``target`` whose payload lives at the higher mode ``source``."""

    source: str
    target: str
    body: "Type"
    pos: Pos | None = _pos()

    @property
    def mode(self) -> str:
        return self.target


@dataclass(frozen=True)
class Up:
    """Type at ``target`` whose payload lives at the lower mode ``source``."""

    source: str
    target: str
    body: "Type"
    pos: Pos | None = _pos()

    @property
    def mode(self) -> str:
        return self.target


@dataclass(frozen=True)
class TVar:
    name: str
    mode: str
    pos: Pos | None = _pos()


# Type-level sugar.  Kept in the tree so that the elaborator can dispatch on
# it; ``types.expand_head`` turns each into its kernel meaning.


@dataclass(frozen=True)
class Arrow:
    arg: "Type"
    result: "Type"
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Par:
    left: "Type"
    right: "Type"
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Monad:
    """``{A}``: a suspended computation at ``mode`` producing ``body``."""

    body: "Type"
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class And:
    """A value from the upper mode paired with a continuation type."""

    left: "Type"
    right: "Type"
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Imp:
    left: "Type"
    right: "Type"
    mode: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Fut:
    body: "Type"
    mode: str
    pos: Pos | None = _pos()


Type = Union[Plus, With, Tensor, One, Lolli, Down, Up, TVar, Arrow, Par, Monad, And, Imp, Fut]
SUGAR_TYPES = (Arrow, Par, Monad, And, Imp, Fut)


def type_children(t: Type) -> list[Type]:
    match t:
        case Plus(branches=bs) | With(branches=bs):
            return [b for _, b in bs]
        case Tensor(left=a, right=b) | Lolli(arg=a, result=b) | Arrow(arg=a, result=b):
            return [a, b]
        case Par(left=a, right=b) | And(left=a, right=b) | Imp(left=a, right=b):
            return [a, b]
        case Down(body=b) | Up(body=b) | Monad(body=b) | Fut(body=b):
            return [b]
    return []


# -------------------------------------------------------------------- values
#
# The same classes double as value sequences (when an argument is itself a
# value rather than a name) and as nested patterns in continuations.


@dataclass(frozen=True)
class Label:
    label: str
    arg: "Name | Value"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Pair:
    first: Name
    second: "Name | Value"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class UnitVal:
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Shift:
    arg: "Name | Value"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class ParPat:
    """The ``<z | w>`` pattern that matches a parallel pair."""

    left: str
    right: str
    pos: Pos | None = _pos()


Value = Union[Label, Pair, UnitVal, Shift]
Pattern = Union[str, Label, Pair, UnitVal, Shift, ParPat]


def is_name(v) -> bool:
    return isinstance(v, (str, Addr))


def is_base_value(v: Value) -> bool:
    match v:
        case Label(arg=a) | Shift(arg=a):
            return is_name(a)
        case Pair(second=b):
            return is_name(b)
        case UnitVal():
            return True
    return False


def value_names(v) -> list[Name]:
    """Names mentioned by a (possibly nested) value, in reading order."""
    if is_name(v):
        return [v]
    match v:
        case Label(arg=a) | Shift(arg=a):
            return value_names(a)
        case Pair(first=a, second=b):
            return [a, *value_names(b)]
    return []


# ------------------------------------------------------------- continuations


@dataclass(frozen=True)
class Branches:
    arms: tuple[tuple[str, str, "Process"], ...]
    pos: Pos | None = _pos()

    def arm(self, label: str):
        for lab, var, body in self.arms:
            if lab == label:
                return var, body
        return None


@dataclass(frozen=True)
class PairMatch:
    first: str
    second: str
    body: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class UnitMatch:
    body: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class ShiftMatch:
    var: str
    body: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class PatCont:
    """Continuation with nested patterns (or a parallel-pair pattern)."""

    arms: tuple[tuple[Pattern, "Process"], ...]
    pos: Pos | None = _pos()


Cont = Union[Branches, PairMatch, UnitMatch, ShiftMatch, PatCont]


# ----------------------------------------------------------------- processes


@dataclass(frozen=True)
class Cut:
    """Allocate ``var``, run ``left`` to fill it, continue with ``right``.

    ``mode`` and ``ty`` are filled in by elaboration.  ``origin`` marks cuts
    introduced by the elaborator for a sequential encoding ("seq", "cbn") or
    by an encoding that may spawn at sequential-only modes ("exempt").
    """

    var: str
    mode: str | None
    left: "Process"
    right: "Process"
    ty: Type | None = None
    origin: str | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Id:
    dest: Name
    src: Name
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Write:
    subject: Name
    value: Value
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Case:
    subject: Name
    cont: Cont
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Call:
    dest: Name
    proc: str
    args: tuple[Name, ...]
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class AtomValWrite:
    outer: Name
    inner: str
    value: Value
    inner_ty: Type | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class AtomContWrite:
    outer: Name
    inner: str
    cont: Cont
    inner_ty: Type | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class AtomIdWrite:
    outer: Name
    inner: str
    src: Name
    inner_ty: Type | None = None
    pos: Pos | None = _pos()


# Process-level sugar.


@dataclass(frozen=True)
class ShortCut:
    """``x <- y ; Q`` or ``x <- p <- ys ; Q`` with any of the three arrows."""

    var: str
    kind: str
    inner: "Id | Call"
    body: "Process"
    ty: Type | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class SeqCut:
    var: str
    left: "Process"
    right: "Process"
    ty: Type | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class CbnCut:
    var: str
    left: "Process"
    right: "Process"
    ty: Type | None = None
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Lambda:
    dest: Name
    var: str
    body: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Apply:
    dest: Name
    fn: "Process"
    arg: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class ParPair:
    dest: Name
    left: "Process"
    right: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class MonadBrace:
    dest: Name
    body: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class MonadBind:
    dest: Name
    body: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class FutureMake:
    dest: Name
    body: "Process"
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Touch:
    subject: Name
    var: str
    body: "Process"
    pos: Pos | None = _pos()


Process = Union[
    Cut, Id, Write, Case, Call, AtomValWrite, AtomContWrite, AtomIdWrite,
    ShortCut, SeqCut, CbnCut, Lambda, Apply, ParPair, MonadBrace, MonadBind, FutureMake, Touch,
]
KERNEL_PROCESSES = (Cut, Id, Write, Case, Call, AtomValWrite, AtomContWrite, AtomIdWrite)
SUGAR_PROCESSES = (ShortCut, SeqCut, CbnCut, Lambda, Apply, ParPair, MonadBrace, MonadBind, FutureMake, Touch)


# ----------------------------------------------------------------- signature


@dataclass(frozen=True)
class ModeDecl:
    name: str
    structural: str  # lin | aff | strict | unr
    seq: bool = False
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class OrderDecl:
    lower: str
    upper: str
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class TypeDef:
    name: str
    mode: str
    body: Type
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class ProcDecl:
    name: str
    params: tuple[tuple[str, Type], ...]
    result: tuple[str, Type]
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class ProcDef:
    name: str
    dest: str
    params: tuple[str, ...]
    body: Process
    pos: Pos | None = _pos()


@dataclass(frozen=True)
class Include:
    path: str
    pos: Pos | None = _pos()


Item = Union[ModeDecl, OrderDecl, TypeDef, ProcDecl, ProcDef, Include]


@dataclass
class Signature:
    """Type definitions, process declarations and process definitions."""

    types: dict[str, TypeDef] = field(default_factory=dict)
    decls: dict[str, ProcDecl] = field(default_factory=dict)
    defs: dict[str, ProcDef] = field(default_factory=dict)

    def type_body(self, name: str) -> Type | None:
        td = self.types.get(name)
        return td.body if td else None


# ---------------------------------------------------------------- traversals


def cont_free_vars(k: Cont) -> set[Name]:
    match k:
        case Branches(arms=arms):
            out: set[Name] = set()
            for _, y, body in arms:
                out |= free_vars(body) - {y}
            return out
        case PairMatch(first=a, second=b, body=body):
            return free_vars(body) - {a, b}
        case UnitMatch(body=body):
            return free_vars(body)
        case ShiftMatch(var=y, body=body):
            return free_vars(body) - {y}
        case PatCont(arms=arms):
            out = set()
            for pat, body in arms:
                out |= free_vars(body) - set(pattern_binders(pat))
            return out
    raise TypeError(f"not a continuation: {k!r}")


def pattern_binders(pat: Pattern) -> list[str]:
    if isinstance(pat, str):
        return [pat]
    match pat:
        case Label(arg=a) | Shift(arg=a):
            return pattern_binders(a)
        case Pair(first=a, second=b):
            return [a, *pattern_binders(b)]
        case ParPat(left=a, right=b):
            return [a, b]
    return []


def free_vars(p: Process) -> set[Name]:
    """Variables (and addresses) a process reads or writes without binding."""
    match p:
        case Cut(var=x, left=l, right=r):
            return (free_vars(l) | free_vars(r)) - {x}
        case Id(dest=d, src=s):
            return {d, s}
        case Write(subject=s, value=v):
            return {s, *value_names(v)}
        case Case(subject=s, cont=k):
            return {s} | cont_free_vars(k)
        case Call(dest=d, args=args):
            return {d, *args}
        case AtomValWrite(outer=o, inner=i, value=v):
            return {o, *value_names(v)} - {i}
        case AtomContWrite(outer=o, inner=i, cont=k):
            return {o} | (cont_free_vars(k) - {i})
        case AtomIdWrite(outer=o, src=s):
            return {o, s}
        case ShortCut(var=x, inner=inner, body=b):
            return (free_vars(inner) | free_vars(b)) - {x}
        case SeqCut(var=x, left=l, right=r) | CbnCut(var=x, left=l, right=r):
            return (free_vars(l) | free_vars(r)) - {x}
        case Lambda(dest=d, var=x, body=b):
            return {d} | (free_vars(b) - {x, STAR})
        case Apply(dest=d, fn=f, arg=a):
            return {d} | ((free_vars(f) | free_vars(a)) - {STAR})
        case ParPair(dest=d, left=l, right=r):
            return {d} | ((free_vars(l) | free_vars(r)) - {STAR})
        case MonadBrace(dest=d, body=b) | MonadBind(dest=d, body=b) | FutureMake(dest=d, body=b):
            return {d} | (free_vars(b) - {STAR})
        case Touch(subject=s, var=z, body=b):
            return {s} | (free_vars(b) - {z})
    raise TypeError(f"not a process: {p!r}")


def all_names(p) -> set[str]:
    """Every string name occurring anywhere in a tree, bound or free."""
    out: set[str] = set()

    def walk(node):
        if isinstance(node, str):
            out.add(node)
        elif isinstance(node, tuple):
            for n in node:
                walk(n)
        elif hasattr(node, "__dataclass_fields__") and not isinstance(node, SUGAR_TYPES + (
                Plus, With, Tensor, One, Lolli, Down, Up, TVar)):
            for f in node.__dataclass_fields__:
                if f in ("pos", "ty", "inner_ty", "mode", "origin", "kind", "proc", "label"):
                    continue
                walk(getattr(node, f))

    walk(p)
    return out


def fresh(base: str, avoid: set[str]) -> str:
    """A name derived from ``base`` that is not in ``avoid`` (which is updated)."""
    root = base.rstrip("'").split("_")[0] if base != STAR else "s"
    root = root or "v"
    i = 1
    while f"{root}_{i}" in avoid:
        i += 1
    name = f"{root}_{i}"
    avoid.add(name)
    return name


# -------------------------------------------------------------- substitution


class _Subst:
    def __init__(self, mapping: dict):
        self.mapping = mapping
        self.targets = {v for v in mapping.values() if isinstance(v, str)}

    def name(self, n, m):
        return m.get(n, n)

    def bind(self, binder: str, m: dict, scope_fv):
        """Enter the scope of ``binder``; returns (binder', mapping')."""
        if binder in m:
            m = {k: v for k, v in m.items() if k != binder}
        if binder in self.targets and m:
            fv = scope_fv()
            if any(k in fv for k in m):
                avoid = set(self.targets) | {x for x in fv if isinstance(x, str)} | {
                    k for k in m if isinstance(k, str)}
                new = fresh(binder, avoid)
                m = dict(m)
                m[binder] = new
                return new, m
        return binder, m


def substitute(p: Process, mapping: dict) -> Process:
    """Capture-avoiding simultaneous substitution of names in a process."""
    if not mapping:
        return p
    return _sub_proc(_Subst(mapping), p, mapping)


def substitute_cont(k: Cont, mapping: dict) -> Cont:
    if not mapping:
        return k
    return _sub_cont(_Subst(mapping), k, mapping)


def substitute_value(v, mapping: dict):
    return _sub_value(v, mapping)


def _sub_value(v, m):
    if isinstance(v, (str, Addr)):
        return m.get(v, v)
    match v:
        case Label(label=l, arg=a):
            return Label(l, _sub_value(a, m), pos=v.pos)
        case Pair(first=a, second=b):
            return Pair(m.get(a, a), _sub_value(b, m), pos=v.pos)
        case Shift(arg=a):
            return Shift(_sub_value(a, m), pos=v.pos)
    return v


def _relevant(m: dict, fv: set) -> dict:
    return {k: v for k, v in m.items() if k in fv}


def _sub_cont(s: _Subst, k: Cont, m: dict) -> Cont:
    match k:
        case Branches(arms=arms):
            out = []
            for lab, y, body in arms:
                y2, m2 = s.bind(y, m, lambda body=body: free_vars(body))
                out.append((lab, y2, _sub_proc(s, body, m2)))
            return Branches(tuple(out), pos=k.pos)
        case PairMatch(first=a, second=b, body=body):
            a2, m2 = s.bind(a, m, lambda: free_vars(body))
            b2, m3 = s.bind(b, m2, lambda: free_vars(body))
            return PairMatch(a2, b2, _sub_proc(s, body, m3), pos=k.pos)
        case UnitMatch(body=body):
            return UnitMatch(_sub_proc(s, body, m), pos=k.pos)
        case ShiftMatch(var=y, body=body):
            y2, m2 = s.bind(y, m, lambda: free_vars(body))
            return ShiftMatch(y2, _sub_proc(s, body, m2), pos=k.pos)
        case PatCont(arms=arms):
            out = []
            for pat, body in arms:
                m2 = m
                ren = {}
                for b in pattern_binders(pat):
                    b2, m2 = s.bind(b, m2, lambda body=body: free_vars(body))
                    if b2 != b:
                        ren[b] = b2
                out.append((_rename_pattern(pat, ren) if ren else pat, _sub_proc(s, body, m2)))
            return PatCont(tuple(out), pos=k.pos)
    raise TypeError(f"not a continuation: {k!r}")


def _rename_pattern(pat, ren):
    if isinstance(pat, str):
        return ren.get(pat, pat)
    match pat:
        case Label(label=l, arg=a):
            return Label(l, _rename_pattern(a, ren), pos=pat.pos)
        case Pair(first=a, second=b):
            return Pair(ren.get(a, a), _rename_pattern(b, ren), pos=pat.pos)
        case Shift(arg=a):
            return Shift(_rename_pattern(a, ren), pos=pat.pos)
        case ParPat(left=a, right=b):
            return ParPat(ren.get(a, a), ren.get(b, b), pos=pat.pos)
    return pat


def _star_scope(s: _Subst, body: Process, m: dict) -> Process:
    m2 = {k: v for k, v in m.items() if k != STAR}
    return _sub_proc(s, body, m2) if m2 else body


def _sub_proc(s: _Subst, p: Process, m: dict) -> Process:
    if not m:
        return p
    g = m.get
    match p:
        case Cut(var=x, left=l, right=r):
            x2, m2 = s.bind(x, m, lambda: free_vars(l) | free_vars(r))
            return replace(p, var=x2, left=_sub_proc(s, l, m2), right=_sub_proc(s, r, m2))
        case Id(dest=d, src=a):
            return Id(g(d, d), g(a, a), pos=p.pos)
        case Write(subject=x, value=v):
            return Write(g(x, x), _sub_value(v, m), pos=p.pos)
        case Case(subject=x, cont=k):
            return Case(g(x, x), _sub_cont(s, k, m), pos=p.pos)
        case Call(dest=d, proc=f, args=args):
            return Call(g(d, d), f, tuple(g(a, a) for a in args), pos=p.pos)
        case AtomValWrite(outer=o, inner=i, value=v):
            i2, m2 = s.bind(i, m, lambda: set(value_names(v)))
            return replace(p, outer=g(o, o), inner=i2, value=_sub_value(v, m2))
        case AtomContWrite(outer=o, inner=i, cont=k):
            i2, m2 = s.bind(i, m, lambda: cont_free_vars(k))
            return replace(p, outer=g(o, o), inner=i2, cont=_sub_cont(s, k, m2))
        case AtomIdWrite(outer=o, inner=i, src=a):
            i2, m2 = s.bind(i, m, lambda: {a})
            return replace(p, outer=g(o, o), inner=i2, src=m2.get(a, a))
        case ShortCut(var=x, inner=inner, body=b):
            x2, m2 = s.bind(x, m, lambda: free_vars(inner) | free_vars(b))
            return replace(p, var=x2, inner=_sub_proc(s, inner, m2), body=_sub_proc(s, b, m2))
        case SeqCut(var=x, left=l, right=r) | CbnCut(var=x, left=l, right=r):
            x2, m2 = s.bind(x, m, lambda: free_vars(l) | free_vars(r))
            return replace(p, var=x2, left=_sub_proc(s, l, m2), right=_sub_proc(s, r, m2))
        case Lambda(dest=d, var=x, body=b):
            x2, m2 = s.bind(x, m, lambda: free_vars(b))
            return Lambda(g(d, d), x2, _star_scope(s, b, m2), pos=p.pos)
        case Apply(dest=d, fn=f, arg=a):
            return Apply(g(d, d), _star_scope(s, f, m), _star_scope(s, a, m), pos=p.pos)
        case ParPair(dest=d, left=l, right=r):
            return ParPair(g(d, d), _star_scope(s, l, m), _star_scope(s, r, m), pos=p.pos)
        case MonadBrace(dest=d, body=b) | MonadBind(dest=d, body=b) | FutureMake(dest=d, body=b):
            return replace(p, dest=g(d, d), body=_star_scope(s, b, m))
        case Touch(subject=x, var=z, body=b):
            z2, m2 = s.bind(z, m, lambda: free_vars(b))
            return Touch(g(x, x), z2, _sub_proc(s, b, m2), pos=p.pos)
    raise TypeError(f"not a process: {p!r}")


# --------------------------------------------------------------- predicates


def is_kernel_cont(k: Cont) -> bool:
    match k:
        case Branches(arms=arms):
            return all(is_kernel(b) for _, _, b in arms)
        case PairMatch(body=b) | UnitMatch(body=b) | ShiftMatch(body=b):
            return is_kernel(b)
    return False


def is_kernel(p: Process) -> bool:
    """True when a process uses only kernel constructors throughout."""
    match p:
        case Cut(left=l, right=r):
            return is_kernel(l) and is_kernel(r)
        case Id() | Call():
            return True
        case Write(value=v) | AtomValWrite(value=v):
            return is_base_value(v)
        case Case(cont=k) | AtomContWrite(cont=k):
            return is_kernel_cont(k)
        case AtomIdWrite():
            return True
    return False


def process_dest(p: Process) -> Name | None:
    """The destination a process writes, when it is syntactically evident."""
    match p:
        case Id(dest=d) | Call(dest=d):
            return d
        case AtomValWrite(outer=o) | AtomContWrite(outer=o) | AtomIdWrite(outer=o):
            return o
    return None
