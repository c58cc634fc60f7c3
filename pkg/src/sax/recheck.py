"""Random instances of the typing rules posited for each sugar construct.

Every instance is a small program: each premise of the rule becomes an
opaque declared process (a call is well typed exactly when the premise
judgement is), and one definition applies the sugar construct to those
premises.  Checking the program desugars the construct and runs the kernel
checker on the result, so an instance passes when the kernel agrees with
the posited rule.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .ast import (
    And, Down, Fut, Imp, Lolli, Monad, One, Par, Plus, TVar, Tensor, Up, With, Arrow, is_kernel,
)
from .diagnostics import Diagnostic
from .printer import show_binding
from .program import check_text

KINDS = {frozenset(): "lin", frozenset("W"): "aff", frozenset("C"): "strict", frozenset("WC"): "unr"}

RULES = (
    "arrow-intro", "arrow-elim", "par-intro", "par-elim", "monad-intro", "monad-elim",
    "and-intro", "and-elim", "imp-intro", "imp-elim", "fut-intro", "fut-elim",
    "seqcut", "cbncut",
)

# User variable names that look like the ones the elaborator invents.
NAMES = ["x'", "y''", "x_1", "y_1", "f_1", "f_2", "z'", "c'", "v_1", "x_2", "p'", "s_1", "w'", "d_1"]


@dataclass
class Instance:
    rule: str
    text: str
    diagnostics: list[Diagnostic] = field(default_factory=list)
    kernel_only: bool = True

    @property
    def ok(self) -> bool:
        return not self.diagnostics and self.kernel_only


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.sigma: dict[str, frozenset] = {}
        self.order: list[tuple[str, str]] = []
        self.above: dict[str, set[str]] = {}
        self.names = iter(rng.sample(NAMES, len(NAMES)))
        self.premises: list[str] = []

    # ------------------------------------------------------------- modes
    def modes(self, n: int, chain: tuple[str, ...] = ()):
        """``n`` modes; the names in ``chain`` are forced into ascending order."""
        rng = self.rng
        names = list(chain) + [f"k{i}" for i in range(n - len(chain))]
        rng.shuffle(names)
        # position in a random linear extension; edges only go upward in it
        rank = sorted(names, key=lambda m: (chain.index(m) if m in chain else rng.random() * len(chain)))
        for i, lo in enumerate(rank):
            for hi in rank[i + 1:]:
                forced = lo in chain and hi in chain and chain.index(hi) == chain.index(lo) + 1
                if forced or rng.random() < 0.4:
                    self.order.append((lo, hi))
        self.above = {m: {m} for m in rank}
        for _ in rank:
            for lo, hi in self.order:
                self.above[lo] |= self.above[hi]
        for m in rank:
            below = [k for k in rank if m in self.above[k] and k != m]
            props = set().union(*(self.sigma[k] for k in below)) if below else set()
            props |= {p for p in "WC" if rng.random() < 0.5}
            self.sigma[m] = frozenset(props)
        return rank

    def header(self, seq_modes) -> list[str]:
        lines = [f"mode {m} {KINDS[s]}" + (" seq" if m in seq_modes else "") for m, s in self.sigma.items()]
        lines += [f"order {lo} < {hi}" for lo, hi in self.order]
        lines += [f"type t_{m} @ {m} = +{{z: 1, s: t_{m}}}" for m in self.sigma]
        return lines

    # ------------------------------------------------------------- types
    def ty(self, m: str, depth: int = 2):
        rng = self.rng
        leaf = depth <= 0 or rng.random() < 0.3
        if leaf:
            return rng.choice([One(m), TVar(f"t_{m}", m)])
        k = rng.randrange(6)
        if k == 0:
            labels = rng.sample(["a", "b", "c"], rng.randint(1, 3))
            return Plus(tuple((l, self.ty(m, depth - 1)) for l in labels), m)
        if k == 1:
            labels = rng.sample(["a", "b", "c"], rng.randint(1, 3))
            return With(tuple((l, self.ty(m, depth - 1)) for l in labels), m)
        if k == 2:
            return Tensor(self.ty(m, depth - 1), self.ty(m, depth - 1), m)
        if k == 3:
            return Lolli(self.ty(m, depth - 1), self.ty(m, depth - 1), m)
        if k == 4:
            r = rng.choice(sorted(self.above[m]))
            return Down(r, m, self.ty(r, depth - 1))
        lower = sorted(k for k in self.sigma if m in self.above[k])
        src = rng.choice(lower)
        return Up(src, m, self.ty(src, depth - 1))

    def fresh(self) -> str:
        return next(self.names)

    def context(self, floor: set[str], size: int | None = None) -> list[tuple[str, object]]:
        """Random variables whose modes lie above every mode in ``floor``."""
        ok = sorted(m for m in self.sigma if all(m in self.above[f] for f in floor))
        if not ok:
            return []
        n = self.rng.randint(0, 3) if size is None else size
        return [(self.fresh(), self.ty(self.rng.choice(ok), 1)) for _ in range(n)]

    def split(self, ctx, parts: int) -> list[list]:
        """Distribute variables among premises, respecting weakening and contraction."""
        out = [[] for _ in range(parts)]
        for x, t in ctx:
            s = self.sigma[t.mode]
            if "W" in s and self.rng.random() < 0.2:
                continue
            chosen = {self.rng.randrange(parts)}
            if "C" in s and parts > 1 and self.rng.random() < 0.3:
                chosen = set(range(parts))
            for i in chosen:
                out[i].append((x, t))
        return out

    # ---------------------------------------------------------- premises
    def premise(self, ctx, result_ty) -> str:
        """Declare an opaque process for ``ctx |- result_ty``; returns its name."""
        name = f"prem{len(self.premises)}"
        params = " ".join(show_binding(x, t) for x, t in ctx)
        args = " ".join(x for x, _ in ctx)
        self.premises.append(
            f"decl {name} :{' ' + params if params else ''} |- {show_binding('r', result_ty)}\n"
            f"proc r <- {name}{' <- ' + args if args else ''} = r <- {name} <-{' ' + args if args else ''}")
        return name

    def call(self, dest: str, ctx, result_ty) -> str:
        name = self.premise(ctx, result_ty)
        return f"{dest} <- {name} <-" + "".join(" " + x for x, _ in ctx)


def _conclusion(ctx, dest: str, ty, body: str) -> str:
    params = " ".join(show_binding(x, t) for x, t in ctx)
    args = " ".join(x for x, _ in ctx)
    return (f"decl concl :{' ' + params if params else ''} |- {show_binding(dest, ty)}\n"
            f"proc {dest} <- concl{' <- ' + args if args else ''} =\n  {body}")


def generate(rule: str, rng: random.Random) -> str:
    """Program text for one random instance of ``rule``."""
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule}")
    g = _Gen(rng)
    two_modes = rule.startswith(("monad", "and", "imp"))
    if two_modes:
        modes = g.modes(rng.randint(2, 4), chain=("n", "s"))
        m, s = "n", "s"
    else:
        modes = g.modes(rng.randint(1, 3))
        m = rng.choice(modes)
    seq_modes = {k for k in modes if rng.random() < 0.5}
    dest = g.fresh()

    match rule:
        case "arrow-intro":
            a, b = g.ty(m), g.ty(m)
            x = g.fresh()
            ctx = g.context({m})
            (used,) = g.split(ctx, 1)
            body = f"{dest}.(fn {x} => {g.call('*', used + [(x, a)], b)})"
            concl = _conclusion(ctx, dest, Arrow(a, b, m), body)
        case "arrow-elim":
            a, b = g.ty(m), g.ty(m)
            ctx = g.context({m})
            c1, c2 = g.split(ctx, 2)
            body = f"{dest} <- ({g.call('*', c1, Arrow(a, b, m))})({g.call('*', c2, a)})"
            concl = _conclusion(ctx, dest, b, body)
        case "par-intro":
            a, b = g.ty(m), g.ty(m)
            ctx = g.context({m})
            c1, c2 = g.split(ctx, 2)
            body = f"{dest}.<{g.call('*', c1, a)} | {g.call('*', c2, b)}>"
            concl = _conclusion(ctx, dest, Par(a, b, m), body)
        case "par-elim":
            a, b, c = g.ty(m), g.ty(m), g.ty(m)
            x, z, w = g.fresh(), g.fresh(), g.fresh()
            ctx = g.context({m})
            (used,) = g.split(ctx, 1)
            body = f"case {x} (<{z} | {w}> => {g.call(dest, used + [(z, a), (w, b)], c)})"
            concl = _conclusion(ctx + [(x, Par(a, b, m))], dest, c, body)
        case "monad-intro":
            a = g.ty(m)
            ctx = g.context({s})
            (used,) = g.split(ctx, 1)
            body = f"{dest}.{{{g.call('*', used, a)}}}"
            concl = _conclusion(ctx, dest, Monad(a, s), body)
        case "monad-elim":
            a = g.ty(m)
            ctx = g.context({s})
            (used,) = g.split(ctx, 1)
            body = f"{{{dest}}} <- {g.call('*', used, Monad(a, s))}"
            concl = _conclusion(ctx, dest, a, body)
        case "and-intro":
            a, b = g.ty(s), g.ty(m)
            v, y = g.fresh(), g.fresh()
            body = f"{dest}.<{v}, {y}>"
            concl = _conclusion([(v, a), (y, b)], dest, And(a, b, m), body)
        case "and-elim":
            a, b, c = g.ty(s), g.ty(m), g.ty(m)
            d, v, y = g.fresh(), g.fresh(), g.fresh()
            ctx = g.context({m})
            (used,) = g.split(ctx, 1)
            body = f"case {d} (<{v}, {y}> => {g.call(dest, used + [(v, a), (y, b)], c)})"
            concl = _conclusion(ctx + [(d, And(a, b, m))], dest, c, body)
        case "imp-intro":
            a, b = g.ty(s), g.ty(m)
            v, y = g.fresh(), g.fresh()
            ctx = g.context({m})
            (used,) = g.split(ctx, 1)
            body = f"case {dest} (<{v}, {y}> => {g.call(y, used + [(v, a)], b)})"
            concl = _conclusion(ctx, dest, Imp(a, b, m), body)
        case "imp-elim":
            a, b = g.ty(s), g.ty(m)
            d, v = g.fresh(), g.fresh()
            body = f"{d}.<{v}, {dest}>"
            concl = _conclusion([(d, Imp(a, b, m)), (v, a)], dest, b, body)
        case "fut-intro":
            a = g.ty(m)
            ctx = g.context({m})
            (used,) = g.split(ctx, 1)
            body = f"{dest}.(future ({g.call('*', used, a)}))"
            concl = _conclusion(ctx, dest, Fut(a, m), body)
        case "fut-elim":
            a, c = g.ty(m), g.ty(m)
            x, z = g.fresh(), g.fresh()
            ctx = g.context({m})
            (used,) = g.split(ctx, 1)
            body = f"touch {x} (<{z}> => {g.call(dest, used + [(z, a)], c)})"
            concl = _conclusion(ctx + [(x, Fut(a, m))], dest, c, body)
        case "seqcut" | "cbncut":
            a, c = g.ty(m), g.ty(m)
            x = g.fresh()
            ctx = g.context({m})
            c1, c2 = g.split(ctx, 2)
            arrow = "<=" if rule == "seqcut" else "<~"
            body = f"{x} {arrow} ({g.call(x, c1, a)}) ;\n  {g.call(dest, c2 + [(x, a)], c)}"
            concl = _conclusion(ctx, dest, c, body)
    return "\n".join(g.header(seq_modes) + g.premises + [concl]) + "\n"


def recheck(rule: str, seed: int) -> Instance:
    """Generate, desugar and kernel-check one instance of ``rule``."""
    text = generate(rule, random.Random(f"{rule}/{seed}"))
    prog, diags = check_text(text)
    kernel_only = prog is not None and all(is_kernel(p) for p in prog.kernel.values())
    return Instance(rule, text, diags, kernel_only)
