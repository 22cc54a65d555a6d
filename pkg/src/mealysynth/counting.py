"""Counting functions: the determinized view of a K-co-Büchi automaton.

A counting function maps every UCW state to a value in [-1, k+1]: -1 means
no run prefix reaches the state, otherwise the maximal number of counted
(color-1) states visited by a run prefix ending there, capped at k+1.
Functions are stored densely as tuples indexed by state number; the bound
k lives in the surrounding context, not in the values, so only functions
of one context may be compared (guarded by length assertions).

The pointwise order makes them a finite lattice; antichains of maximal
elements represent downward-closed sets compactly.
"""
from __future__ import annotations

from typing import Iterable, Iterator, Optional

from .automata import UCW

CountingFunction = tuple  # tuple[int, ...], dense over UCW states


def cf_initial(a: UCW, k: int) -> CountingFunction:
    """Initial states get their own visit count (0, or 1 if counted)."""
    vals = [-1] * a.n
    for q in a.initial:
        vals[q] = 1 if q in a.counted else 0
    return tuple(vals)


def cf_step(a: UCW, k: int, f: CountingFunction, letter_idx: int) -> CountingFunction:
    """Successor function: per target, max over active predecessors, plus
    one on counted targets, capped at k+1; unreached targets stay -1."""
    assert len(f) == a.n
    best = [-1] * a.n
    for src in range(a.n):
        v = f[src]
        if v < 0:
            continue
        for dst in a.trans[src][letter_idx]:
            if v > best[dst]:
                best[dst] = v
    out = []
    for q in range(a.n):
        b = best[q]
        if b < 0:
            out.append(-1)
        elif q in a.counted:
            out.append(min(b + 1, k + 1))
        else:
            out.append(min(b, k + 1))
    return tuple(out)


def cf_leq(f: CountingFunction, g: CountingFunction) -> bool:
    assert len(f) == len(g)
    return all(x <= y for x, y in zip(f, g))


def cf_join(f: CountingFunction, g: CountingFunction) -> CountingFunction:
    assert len(f) == len(g)
    return tuple(max(x, y) for x, y in zip(f, g))


def cf_meet(f: CountingFunction, g: CountingFunction) -> CountingFunction:
    assert len(f) == len(g)
    return tuple(min(x, y) for x, y in zip(f, g))


def cf_is_unsafe(f: CountingFunction, k: int) -> bool:
    return any(v == k + 1 for v in f)


def cf_bottom(n: int) -> CountingFunction:
    return (-1,) * n


def cf_top_safe(n: int, k: int) -> CountingFunction:
    return (k,) * n


def cf_pre_max(a: UCW, k: int, f: CountingFunction, letter_idx: int) -> CountingFunction:
    """Largest g with cf_step(g, letter) pointwise below the safe f.

    g(src) = min over successors dst of f(dst) minus the dst visit cost;
    negative minima deactivate src (-1), and values are capped at k.
    """
    assert len(f) == a.n and not cf_is_unsafe(f, k)
    out = []
    for src in range(a.n):
        v = k
        for dst in a.trans[src][letter_idx]:
            c = f[dst] - (1 if dst in a.counted else 0)
            if c < v:
                v = c
        out.append(-1 if v < 0 else v)
    return tuple(out)


def cf_dump(f: CountingFunction, k: int) -> str:
    """Debug rendering, e.g. "q0:0 q1:-1 | k=2"."""
    return " ".join(f"q{i}:{v}" for i, v in enumerate(f)) + f" | k={k}"


class CfAntichain:
    """Set of pairwise incomparable counting functions (the maximal ones).

    Containers are persistent values: `insert` returns a new antichain.
    """

    __slots__ = ("elements",)

    def __init__(self, elements: Iterable[CountingFunction] = ()):
        self.elements: tuple[CountingFunction, ...] = tuple(sorted(elements))

    @classmethod
    def of(cls, funcs: Iterable[CountingFunction]) -> "CfAntichain":
        """Antichain of the maximal elements of `funcs`."""
        kept: list[CountingFunction] = []
        for f in funcs:
            if any(cf_leq(f, g) for g in kept):
                continue
            kept = [g for g in kept if not cf_leq(g, f)]
            kept.append(f)
        return cls(kept)

    def insert(self, f: CountingFunction) -> "CfAntichain":
        if self.member_below(f):
            return self
        kept = [g for g in self.elements if not cf_leq(g, f)]
        kept.append(f)
        return CfAntichain(kept)

    def member_below(self, f: CountingFunction) -> bool:
        """True iff f is dominated by some element (f in the closure)."""
        return any(cf_leq(f, g) for g in self.elements)

    def __iter__(self) -> Iterator[CountingFunction]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other) -> bool:
        return isinstance(other, CfAntichain) and self.elements == other.elements

    def __hash__(self):
        return hash(self.elements)

    def __repr__(self):
        return f"<CfAntichain {len(self.elements)} elements>"


def antichain_insert(ac: CfAntichain, f: CountingFunction) -> CfAntichain:
    return ac.insert(f)


def antichain_member_below(ac: CfAntichain, f: CountingFunction) -> bool:
    return ac.member_below(f)
