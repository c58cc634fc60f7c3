"""Lexer and recursive-descent parser for ``.sax`` source files.

Parsing happens in two passes.  The first builds items whose types may
lack modes; the second (``resolve``) assigns a mode to every type node
using the declared modes, type definitions and explicit ``@ m``
annotations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .ast import (
    STAR, And, Apply, Arrow, AtomContWrite, AtomIdWrite, AtomValWrite, Branches, Call, Case,
    CbnCut, Cut, Down, Fut, FutureMake, Id, Imp, Include, Item, Label, Lambda, Lolli, ModeDecl,
    Monad, MonadBind, MonadBrace, One, OrderDecl, Pair, Par, ParPair, ParPat, PairMatch, PatCont,
    Plus, ProcDecl, ProcDef, SeqCut, Shift, ShiftMatch, ShortCut, Tensor, Touch, TVar, TypeDef,
    UnitMatch, UnitVal, Up, With, Write, is_base_value,
)
from .diagnostics import Diagnostic, Pos, SaxError

KEYWORDS = {
    "mode", "order", "type", "decl", "proc", "include", "case", "shift", "fn", "future",
    "touch", "down", "up", "fut",
}
SYMBOLS = [
    "==>", "<-", "<=", "<~", "=>", "|-", "||", "/\\", "-o", "->",
    "<", ">", "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "|", "=", "+", "&", "*", "@",
]
_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>%[^\n]*)"
    r"|(?P<string>\"[^\"\n]*\")"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<num>[0-9]+)"
    r"|(?P<sym>" + "|".join(re.escape(s) for s in SYMBOLS) + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | kw | num | string | sym | eof
    text: str
    pos: Pos


def lex(text: str, file: str | None = None) -> list[Token]:
    tokens = []
    line, line_start, i = 1, 0, 0
    n = len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        if not m:
            pos = Pos(line, i - line_start + 1, i, file)
            raise SaxError(Diagnostic("SyntaxError", f"unexpected character {text[i]!r}", pos))
        kind = m.lastgroup
        pos = Pos(line, i - line_start + 1, i, file)
        tok = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if tok in KEYWORDS else "ident", tok, pos))
        elif kind == "sym":
            if tok == "-o" and m.end() < n and (text[m.end()].isalnum() or text[m.end()] in "_'"):
                raise SaxError(Diagnostic("SyntaxError", "unexpected '-'", pos))
            tokens.append(Token("sym", tok, pos))
        elif kind in ("num", "string"):
            tokens.append(Token(kind, tok, pos))
        i = m.end()
    tokens.append(Token("eof", "", Pos(line, i - line_start + 1, i, file)))
    return tokens


@dataclass(frozen=True)
class _Annot:
    """``(A @ m)`` before resolution."""

    body: object
    mode: str
    pos: Pos | None = None


_CUT_ARROWS = ("<-", "<=", "<~")


class Parser:
    def __init__(self, text: str, file: str | None = None):
        self.file = file
        self.toks = lex(text, file)
        self.i = 0

    # -- token helpers
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("sym", "kw") and t.text == text

    def at_name(self, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == "ident" or (t.kind == "sym" and t.text == "*")

    def advance(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        found = tok.text or "end of file"
        raise SaxError(Diagnostic("SyntaxError", f"{msg}, found {found!r}", tok.pos))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            self.error("expected identifier")
        self.advance()
        return t.text

    def name(self) -> str:
        if self.at("*"):
            self.advance()
            return STAR
        return self.ident()

    # -- items
    def items(self) -> list[Item]:
        out = []
        while self.peek().kind != "eof":
            out.append(self.item())
        return out

    def item(self) -> Item:
        t = self.peek()
        if self.at("mode"):
            self.advance()
            name = self.ident()
            kind_tok = self.peek()
            kind = self.ident()
            if kind not in ("lin", "aff", "strict", "unr"):
                self.error("expected lin, aff, strict or unr", kind_tok)
            seq = False
            if self.peek().kind == "ident" and self.peek().text == "seq":
                self.advance()
                seq = True
            return ModeDecl(name, kind, seq, pos=t.pos)
        if self.at("order"):
            self.advance()
            lo = self.ident()
            self.expect("<")
            hi = self.ident()
            return OrderDecl(lo, hi, pos=t.pos)
        if self.at("type"):
            self.advance()
            name = self.ident()
            self.expect("@")
            mode = self.ident()
            self.expect("=")
            return TypeDef(name, mode, self.type_(), pos=t.pos)
        if self.at("decl"):
            self.advance()
            name = self.ident()
            self.expect(":")
            params = []
            while self.at("("):
                params.append(self.binding())
            self.expect("|-")
            return ProcDecl(name, tuple(params), self.binding(), pos=t.pos)
        if self.at("proc"):
            self.advance()
            dest = self.ident()
            self.expect("<-")
            name = self.ident()
            params = []
            if self.at("<-"):
                self.advance()
            while self.peek().kind == "ident":
                params.append(self.ident())
            self.expect("=")
            return ProcDef(name, dest, tuple(params), self.proc(), pos=t.pos)
        if self.at("include"):
            self.advance()
            s = self.peek()
            if s.kind != "string":
                self.error("expected a quoted path")
            self.advance()
            return Include(s.text[1:-1], pos=t.pos)
        self.error("expected mode, order, type, decl, proc or include")

    def binding(self):
        self.expect("(")
        x = self.ident()
        self.expect(":")
        ty = self.annotated_type()
        self.expect(")")
        return (x, ty)

    def annotated_type(self):
        t0 = self.peek()
        ty = self.type_()
        if self.at("@"):
            self.advance()
            ty = _Annot(ty, self.ident(), t0.pos)
        return ty

    # -- types
    def type_(self):
        t0 = self.peek()
        left = self.ptype()
        for op, ctor in (("-o", Lolli), ("->", Arrow), ("==>", Imp)):
            if self.at(op):
                self.advance()
                return ctor(left, self.type_(), None, pos=t0.pos)
        return left

    def ptype(self):
        t0 = self.peek()
        left = self.atype()
        for op, ctor in (("*", Tensor), ("||", Par), ("/\\", And)):
            if self.at(op):
                self.advance()
                return ctor(left, self.ptype(), None, pos=t0.pos)
        return left

    def atype(self):
        t = self.peek()
        if t.kind == "num":
            if t.text != "1":
                self.error("expected a type")
            self.advance()
            return One(None, pos=t.pos)
        if self.at("+") or self.at("&"):
            ctor = Plus if t.text == "+" else With
            self.advance()
            self.expect("{")
            branches = []
            while True:
                lab = self.ident()
                self.expect(":")
                branches.append((lab, self.type_()))
                if not self.at(","):
                    break
                self.advance()
            self.expect("}")
            return ctor(tuple(branches), None, pos=t.pos)
        if self.at("down") or self.at("up"):
            self.advance()
            self.expect("[")
            src = self.ident()
            self.expect("]")
            body = self.atype()
            return (Down if t.text == "down" else Up)(src, None, body, pos=t.pos)
        if self.at("fut"):
            self.advance()
            return Fut(self.atype(), None, pos=t.pos)
        if self.at("{"):
            self.advance()
            body = self.annotated_type()
            self.expect("}")
            return Monad(body, None, pos=t.pos)
        if self.at("("):
            self.advance()
            ty = self.annotated_type()
            self.expect(")")
            return ty
        if t.kind == "ident":
            self.advance()
            return TVar(t.text, None, pos=t.pos)
        self.error("expected a type")

    # -- processes
    def proc(self):
        t = self.peek()
        if self.at("case"):
            self.advance()
            subj = self.name()
            return Case(subj, self.cont(), pos=t.pos)
        if self.at("touch"):
            self.advance()
            subj = self.name()
            self.expect("(")
            self.expect("<")
            z = self.ident()
            self.expect(">")
            self.expect("=>")
            body = self.proc()
            self.expect(")")
            return Touch(subj, z, body, pos=t.pos)
        if self.at("("):
            self.advance()
            p = self.proc()
            self.expect(")")
            return p
        if self.at("{"):
            self.advance()
            c = self.name()
            self.expect("}")
            self.expect("<-")
            return MonadBind(c, self.proc(), pos=t.pos)
        if not self.at_name():
            self.error("expected a process")
        x = self.name()
        if self.at("."):
            self.advance()
            return self.write(x, t.pos)
        ty = None
        if self.at(":"):
            self.advance()
            ty = self.annotated_type()
            if not any(self.at(a) for a in _CUT_ARROWS):
                self.error("expected a cut arrow after the annotation")
        for arrow in _CUT_ARROWS:
            if self.at(arrow):
                self.advance()
                return self.after_arrow(x, arrow, ty, t.pos)
        self.error("expected '.', '<-', '<=' or '<~'")

    def after_arrow(self, x: str, arrow: str, ty, pos: Pos):
        rhs_tok = self.peek()
        if self.at_name() and not self.at(".", 1):
            y = self.name()
            if self.at("<-"):
                self.advance()
                args = []
                while self.at_name():
                    args.append(self.name())
                inner = Call(x, y, tuple(args), pos=rhs_tok.pos)
            else:
                inner = Id(x, y, pos=rhs_tok.pos)
            if self.at(";"):
                self.advance()
                return ShortCut(x, arrow, inner, self.proc(), ty, pos=pos)
            if arrow != "<-" or ty is not None:
                self.error("expected ';'")
            return replace(inner, pos=pos)
        if self.at("("):
            self.advance()
            left = self.proc()
            self.expect(")")
            if self.at("("):
                self.advance()
                arg = self.proc()
                self.expect(")")
                left = Apply(x, left, arg, pos=rhs_tok.pos)
                if not self.at(";"):
                    if arrow != "<-" or ty is not None:
                        self.error("expected ';'")
                    return replace(left, pos=pos)
        else:
            left = self.proc()
        self.expect(";")
        right = self.proc()
        if arrow == "<-":
            return Cut(x, None, left, right, ty, pos=pos)
        if arrow == "<=":
            return SeqCut(x, left, right, ty, pos=pos)
        return CbnCut(x, left, right, ty, pos=pos)

    def write(self, x: str, pos: Pos):
        t = self.peek()
        if self.at("shift"):
            self.advance()
            self.expect("(")
            if self.at("case"):
                self.advance()
                inner = self.ident()
                k = self.cont()
                self.expect(")")
                return AtomContWrite(x, inner, k, pos=pos)
            if self.peek().kind == "ident" and self.at(".", 1):
                inner = self.ident()
                self.advance()
                v = self.value()
                if not is_base_value(v):
                    self.error("atomic writes take a plain value", t)
                self.expect(")")
                return AtomValWrite(x, inner, v, pos=pos)
            if self.peek().kind == "ident" and self.at("<-", 1):
                inner = self.ident()
                self.advance()
                src = self.name()
                self.expect(")")
                return AtomIdWrite(x, inner, src, pos=pos)
            arg = self.varg()
            self.expect(")")
            return Write(x, Shift(arg, pos=t.pos), pos=pos)
        if self.at("<"):
            if self.at(">", 1):
                self.advance()
                self.advance()
                return Write(x, UnitVal(pos=t.pos), pos=pos)
            if self.at_name(1) and self.at(",", 2):
                return Write(x, self.value(), pos=pos)
            self.advance()
            left = self.proc()
            self.expect("|")
            right = self.proc()
            self.expect(">")
            return ParPair(x, left, right, pos=pos)
        if self.at("("):
            self.advance()
            if self.at("fn"):
                self.advance()
                v = self.ident()
                self.expect("=>")
                body = self.proc()
                self.expect(")")
                return Lambda(x, v, body, pos=pos)
            if self.at("future"):
                self.advance()
                body = self.proc()
                self.expect(")")
                return FutureMake(x, body, pos=pos)
            self.error("expected 'fn' or 'future'")
        if self.at("{"):
            self.advance()
            body = self.proc()
            self.expect("}")
            return MonadBrace(x, body, pos=pos)
        if self.peek().kind == "ident":
            return Write(x, self.value(), pos=pos)
        self.error("expected a value")

    def value(self):
        """A value whose arguments may themselves be nested values."""
        t = self.peek()
        if self.at("<"):
            self.advance()
            if self.at(">"):
                self.advance()
                return UnitVal(pos=t.pos)
            first = self.name()
            self.expect(",")
            second = self.varg()
            self.expect(">")
            return Pair(first, second, pos=t.pos)
        if self.at("shift"):
            self.advance()
            self.expect("(")
            arg = self.varg()
            self.expect(")")
            return Shift(arg, pos=t.pos)
        if self.peek().kind == "ident" and self.at("(", 1):
            lab = self.ident()
            self.advance()
            arg = self.varg()
            self.expect(")")
            return Label(lab, arg, pos=t.pos)
        self.error("expected a value")

    def varg(self):
        if self.at_name() and not self.at("(", 1):
            return self.name()
        return self.value()

    def cont(self):
        t = self.expect("(")
        arms = []
        while True:
            pat = self.pattern(top=True)
            self.expect("=>")
            arms.append((pat, self.proc()))
            if not self.at("|"):
                break
            self.advance()
        self.expect(")")
        return build_cont(arms, t.pos, self)

    def pattern(self, top=False):
        t = self.peek()
        if self.at("<"):
            self.advance()
            if self.at(">"):
                self.advance()
                return UnitVal(pos=t.pos)
            first = self.ident()
            if top and self.at("|"):
                self.advance()
                second = self.ident()
                self.expect(">")
                return ParPat(first, second, pos=t.pos)
            self.expect(",")
            second = self.pattern()
            self.expect(">")
            return Pair(first, second, pos=t.pos)
        if self.at("shift"):
            self.advance()
            self.expect("(")
            arg = self.pattern()
            self.expect(")")
            return Shift(arg, pos=t.pos)
        if self.peek().kind == "ident":
            if self.at("(", 1):
                lab = self.ident()
                self.advance()
                arg = self.pattern()
                self.expect(")")
                return Label(lab, arg, pos=t.pos)
            if top:
                self.error("expected a pattern")
            return self.ident()
        self.error("expected a pattern")


def build_cont(arms, pos, parser=None):
    """Pick the kernel continuation form when every pattern is flat."""
    flat = all(isinstance(p, (Label, Pair, Shift)) and isinstance(
        p.arg if not isinstance(p, Pair) else p.second, str) or isinstance(p, UnitVal)
        for p, _ in arms)
    kinds = {type(p) for p, _ in arms}
    if len(kinds) > 1 and parser is not None:
        parser.error("continuation mixes pattern shapes")
    if flat:
        first = arms[0][0]
        if isinstance(first, Label):
            return Branches(tuple((p.label, p.arg, body) for p, body in arms), pos=pos)
        if len(arms) == 1:
            p, body = arms[0]
            if isinstance(p, Pair):
                return PairMatch(p.first, p.second, body, pos=pos)
            if isinstance(p, UnitVal):
                return UnitMatch(body, pos=pos)
            if isinstance(p, Shift):
                return ShiftMatch(p.arg, body, pos=pos)
    return PatCont(tuple(arms), pos=pos)


def parse_items(text: str, file: str | None = None) -> list[Item]:
    return Parser(text, file).items()


def parse_type_text(text: str):
    p = Parser(text)
    ty = p.annotated_type()
    if p.peek().kind != "eof":
        p.error("trailing input after type")
    return ty


def parse_process_text(text: str):
    p = Parser(text)
    proc = p.proc()
    if p.peek().kind != "eof":
        p.error("trailing input after process")
    return proc


# ----------------------------------------------------------- mode resolution


class ModeResolver:
    """Fills in the mode of every type node."""

    def __init__(self, mode_names: set[str], order: list[tuple[str, str]], type_modes: dict[str, str]):
        self.modes = mode_names
        self.type_modes = type_modes
        self.below: dict[str, set[str]] = {m: set() for m in mode_names}
        self.above: dict[str, set[str]] = {m: set() for m in mode_names}
        for lo, hi in order:
            if lo in self.modes and hi in self.modes:
                self.below[hi].add(lo)
                self.above[lo].add(hi)

    def intrinsic(self, t) -> str | None:
        if isinstance(t, _Annot):
            return t.mode
        match t:
            case TVar(name=n):
                return self.type_modes.get(n)
            case Tensor(left=a, right=b) | Par(left=a, right=b):
                return self.intrinsic(a) or self.intrinsic(b)
            case Lolli(arg=a, result=b) | Arrow(arg=a, result=b):
                return self.intrinsic(a) or self.intrinsic(b)
            case And(right=b) | Imp(right=b) | Fut(body=b):
                return self.intrinsic(b)
            case Plus(branches=bs) | With(branches=bs):
                return next((m for _, b in bs if (m := self.intrinsic(b))), None)
        return None

    def _mismatch(self, msg, pos):
        raise SaxError(Diagnostic("ModeMismatch", msg, pos))

    def top(self, t, pos=None):
        m = self.intrinsic(t)
        if m is None:
            self._mismatch("cannot determine the mode of this type; annotate it with '@ mode'",
                           getattr(t, "pos", pos))
        return self.resolve(t, m)

    def _other(self, t, m, candidates, what):
        got = self.intrinsic(t)
        if got is not None:
            return got
        if len(candidates) == 1:
            return next(iter(candidates))
        self._mismatch(f"cannot determine the mode of the {what} relative to mode {m}; "
                       "annotate it with '@ mode'", getattr(t, "pos", None))

    def resolve(self, t, m: str):
        if m not in self.modes:
            raise SaxError(Diagnostic("UnknownMode", f"unknown mode {m}", getattr(t, "pos", None)))
        match t:
            case _Annot(body=b, mode=k):
                if k != m:
                    self._mismatch(f"type annotated at mode {k} used at mode {m}", t.pos)
                return self.resolve(b, m)
            case TVar(name=n):
                return TVar(n, self.type_modes.get(n, m), pos=t.pos)
            case One():
                return One(m, pos=t.pos)
            case Plus(branches=bs) | With(branches=bs):
                return type(t)(tuple((l, self.resolve(b, m)) for l, b in bs), m, pos=t.pos)
            case Tensor(left=a, right=b) | Par(left=a, right=b):
                return type(t)(self.resolve(a, m), self.resolve(b, m), m, pos=t.pos)
            case Lolli(arg=a, result=b) | Arrow(arg=a, result=b):
                return type(t)(self.resolve(a, m), self.resolve(b, m), m, pos=t.pos)
            case Down(source=r, body=b) | Up(source=r, body=b):
                return type(t)(r, m, self.resolve(b, r), pos=t.pos)
            case Fut(body=b):
                return Fut(self.resolve(b, m), m, pos=t.pos)
            case Monad(body=b):
                n = self._other(b, m, self.below[m], "monad body")
                return Monad(self.resolve(b, n), m, pos=t.pos)
            case And(left=a, right=b) | Imp(left=a, right=b):
                s = self._other(a, m, self.above[m], "left component")
                return type(t)(self.resolve(a, s), self.resolve(b, m), m, pos=t.pos)
        raise TypeError(f"not a type: {t!r}")


def _resolve_process(p, r: ModeResolver):
    """Resolve modes of cut annotations inside a process."""
    def go(node):
        if isinstance(node, (Cut, ShortCut, SeqCut, CbnCut)) and node.ty is not None:
            node = replace(node, ty=r.top(node.ty))
        if isinstance(node, tuple):
            return tuple(go(n) for n in node)
        if hasattr(node, "__dataclass_fields__") and not isinstance(node, (TVar, One, Plus, With)):
            changes = {}
            for f in node.__dataclass_fields__:
                if f in ("pos", "ty", "inner_ty"):
                    continue
                v = getattr(node, f)
                if isinstance(v, tuple) or hasattr(v, "__dataclass_fields__"):
                    nv = go(v)
                    if nv is not v:
                        changes[f] = nv
            if changes:
                return replace(node, **changes)
        return node

    return go(p)


# ------------------------------------------------------------------- loading


@dataclass
class SourceFile:
    path: str | None
    text: str
    items: list[Item]


@dataclass
class LoadedItems:
    own: list[Item]
    all: list[Item] = field(default_factory=list)


def _collect(text: str, path: str | None, seen: set[str], out: list[Item]) -> list[Item]:
    items = parse_items(text, path)
    for it in items:
        if isinstance(it, Include):
            base = Path(path).parent if path else Path.cwd()
            target = (base / it.path).resolve()
            key = str(target)
            if key in seen:
                continue
            seen.add(key)
            try:
                sub = target.read_text()
            except OSError as e:
                raise SaxError(Diagnostic("IncludeError", f"cannot read {it.path}: {e.strerror}", it.pos))
            _collect(sub, key, seen, out)
        else:
            out.append(it)
    return items


def resolve_items(own: list[Item], everything: list[Item]) -> tuple[list[Item], list[Item]]:
    modes = {it.name for it in everything if isinstance(it, ModeDecl)}
    order = [(it.lower, it.upper) for it in everything if isinstance(it, OrderDecl)]
    tmodes = {it.name: it.mode for it in everything if isinstance(it, TypeDef)}
    r = ModeResolver(modes, order, tmodes)

    def fix(it):
        if isinstance(it, TypeDef):
            return replace(it, body=r.resolve(it.body, it.mode))
        if isinstance(it, ProcDecl):
            params = tuple((x, r.top(t)) for x, t in it.params)
            return replace(it, params=params, result=(it.result[0], r.top(it.result[1])))
        if isinstance(it, ProcDef):
            return replace(it, body=_resolve_process(it.body, r))
        return it

    cache = {id(it): fix(it) for it in everything}
    resolved_all = [cache[id(it)] for it in everything]
    resolved_own = [cache.get(id(it)) or fix(it) for it in own]
    return resolved_own, resolved_all


def parse(text: str, path: str | None = None) -> SourceFile:
    """Parse a source file (following includes) and resolve all type modes."""
    everything: list[Item] = []
    seen = {str(Path(path).resolve())} if path else set()
    own = _collect(text, path, seen, everything)
    own_resolved, _ = resolve_items(own, everything)
    return SourceFile(path, text, own_resolved)


def parse_program_items(text: str, path: str | None = None) -> tuple[list[Item], list[Item]]:
    """Return (items of this file, all items including those from includes)."""
    everything: list[Item] = []
    seen = {str(Path(path).resolve())} if path else set()
    own = _collect(text, path, seen, everything)
    return resolve_items(own, everything)
