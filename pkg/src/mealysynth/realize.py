"""Realizability of a specification relative to a partial machine.

The central tool is a least fixpoint labelling every machine state with
the join of all counting functions the specification automaton can reach
along words into that state.  A partial machine can be completed into a
machine realizing the safety game iff every label lies below the winning
antichain; a complete machine realizes the full co-Büchi specification
iff no label ever goes unsafe for the product-sized bound.
"""
from __future__ import annotations

from collections import deque
from typing import Optional

from .automata import UCW
from .counting import CountingFunction, cf_bottom, cf_initial, cf_is_unsafe, cf_join, cf_step
from .games import SafetyContext
from .machines import Mealy, PreMealy


def _fixpoint(
    p: PreMealy,
    a: UCW,
    k: int,
    labels: Optional[list] = None,
    dirty: Optional[list] = None,
    prune=None,
) -> tuple[list, bool]:
    """Propagate counting functions along machine transitions to stability.

    `labels`/`dirty` allow resuming after the machine grew by a transition
    (labels only ever grow, so reusing them is sound).  `prune(f)` is an
    early-exit test: the fixpoint stops as soon as a label violates it,
    since labels only increase and the tested property is downward closed.
    Returns (labels, ok).
    """
    n_out = len(p.alphabet.output_vals)
    if labels is None:
        labels = [cf_bottom(a.n)] * p.n
        labels[p.initial] = cf_initial(a, k)
        dirty = [p.initial]
    else:
        labels = list(labels)
        assert dirty is not None
    if prune is not None:
        for q in dirty:
            if not prune(labels[q]):
                return labels, False
    queue = deque(dirty)
    queued = set(dirty)
    updates = 0
    # each label strictly increases at most |Q|*(k+2) times
    bound = p.n * (a.n * (k + 2) + 1) + 1
    while queue:
        q = queue.popleft()
        queued.discard(q)
        f = labels[q]
        for i in sorted(p.trans[q]):
            o, dst = p.trans[q][i]
            f2 = cf_step(a, k, f, i * n_out + o)
            new = cf_join(labels[dst], f2)
            if new != labels[dst]:
                labels[dst] = new
                updates += 1
                assert updates <= bound, "label fixpoint failed to stabilize within its bound"
                if prune is not None and not prune(new):
                    return labels, False
                if dst not in queued:
                    queue.append(dst)
                    queued.add(dst)
    return labels, True


def fstar_labels(p: PreMealy, ctx: SafetyContext) -> list[CountingFunction]:
    """Per-state join of reachable counting functions (the F* labelling)."""
    labels, _ = _fixpoint(p, ctx.ucw, ctx.k)
    return labels


def p_realizable(p: PreMealy, ctx: SafetyContext) -> bool:
    """Can `p` be completed into a machine realizing the safety game?

    Holds iff every state label is below the winning antichain; unsafe
    labels are never winning, so machine safety is subsumed.
    """
    _, ok = _fixpoint(p, ctx.ucw, ctx.k, prune=ctx.member_below)
    return ok


def machine_realizes(m: Mealy, a: UCW) -> bool:
    """Does the complete machine's every behavior satisfy the specification?

    Uses the product-size visit bound: with k = |automaton| * |machine|,
    the co-Büchi and k-co-Büchi conditions agree on the machine's runs, so
    it suffices that no state label goes unsafe.
    """
    assert m.is_complete, "machine_realizes needs a complete machine"
    k = a.n * m.n
    _, ok = _fixpoint(m, a, k, prune=lambda f: not cf_is_unsafe(f, k))
    return ok
