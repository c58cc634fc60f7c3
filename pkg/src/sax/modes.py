"""Mode theories: modes with structural properties, a preorder, sequential flags."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from .diagnostics import Diagnostic, Pos, SaxError

W = "W"
C = "C"

STRUCTURAL = {
    "lin": frozenset(),
    "aff": frozenset({W}),
    "strict": frozenset({C}),
    "unr": frozenset({W, C}),
}


@dataclass
class ModeTheory:
    sigma: dict[str, frozenset[str]] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)  # (lower, upper)
    seq_only: set[str] = field(default_factory=set)
    positions: dict[str, Pos | None] = field(default_factory=dict)
    _above: dict[str, frozenset[str]] = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, modes: Iterable[tuple[str, str, bool]], order: Iterable[tuple[str, str]] = ()) -> "ModeTheory":
        """Build from ``(name, lin|aff|strict|unr, seq)`` triples and ``(lower, upper)`` pairs."""
        mt = cls()
        for name, kind, seq in modes:
            mt.add_mode(name, kind, seq)
        for lo, hi in order:
            mt.add_order(lo, hi)
        mt.close()
        return mt

    def add_mode(self, name: str, kind: str, seq: bool = False, pos: Pos | None = None):
        if name in self.sigma:
            raise SaxError(Diagnostic("DuplicateMode", f"mode {name} declared twice", pos))
        if kind not in STRUCTURAL:
            raise SaxError(Diagnostic("SyntaxError", f"unknown structural kind {kind}", pos))
        self.sigma[name] = STRUCTURAL[kind]
        self.positions[name] = pos
        if seq:
            self.seq_only.add(name)

    def add_order(self, lower: str, upper: str, pos: Pos | None = None):
        for m in (lower, upper):
            if m not in self.sigma:
                raise SaxError(Diagnostic("UnknownMode", f"unknown mode {m}", pos))
        self.edges.append((lower, upper))

    def close(self):
        """Compute the reflexive-transitive closure of the declared order."""
        g = nx.DiGraph()
        g.add_nodes_from(self.sigma)
        g.add_edges_from(self.edges)
        closure = nx.transitive_closure(g, reflexive=True)
        self._above = {m: frozenset(closure.successors(m)) for m in self.sigma}

    @property
    def modes(self) -> list[str]:
        return list(self.sigma)

    def _known(self, m: str):
        if m not in self.sigma:
            raise SaxError(Diagnostic("UnknownMode", f"unknown mode {m}"))

    def leq(self, k: str, m: str) -> bool:
        """True iff ``m >= k``."""
        self._known(k)
        self._known(m)
        return m in self._above[k]

    def geq(self, m: str, k: str) -> bool:
        return self.leq(k, m)

    def allows(self, m: str, prop: str) -> bool:
        self._known(m)
        return prop in self.sigma[m]

    def weakenable(self, m: str) -> bool:
        return self.allows(m, W)

    def contractible(self, m: str) -> bool:
        return self.allows(m, C)

    def is_seq_only(self, m: str) -> bool:
        return m in self.seq_only

    def above(self, k: str) -> frozenset[str]:
        return self._above[k]

    def context_geq(self, modes: Iterable[str], k: str) -> bool:
        return all(self.leq(k, m) for m in modes)

    def check(self) -> list[Diagnostic]:
        """Monotonicity: whenever m >= k, sigma(m) must contain sigma(k)."""
        out = []
        for k in self.sigma:
            for m in sorted(self._above[k]):
                if not self.sigma[m] >= self.sigma[k]:
                    out.append(Diagnostic(
                        "SigmaNotMonotone",
                        f"mode {m} is above {k} but lacks {', '.join(sorted(self.sigma[k] - self.sigma[m]))}",
                        self.positions.get(m)))
        return out
