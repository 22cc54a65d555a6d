"""Two-phase synthesis from a specification and example traces.

Phase one generalizes the examples: a prefix tree of the examples is
folded by state merging, keeping only merges that preserve both output
determinism and completability into a machine winning the safety game.
Phase two completes the remaining holes, again testing every candidate
transition for completability, preferring existing states (lazy), so the
loop terminates.  The top-level driver reduces an omega-regular
specification to safety games of increasing visit bounds k.

Merging and completion choices are delegated to strategy functions; the
defaults prefer targets with pointwise-minimal counting-function labels,
which keeps the most behaviors available, with deterministic tie-breaks
on state index and output order.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .automata import UCW
from .counting import cf_bottom, cf_leq, cf_step
from .games import SafetyContext
from .machines import (
    ExampleSet,
    Mealy,
    PreMealy,
    StatePartition,
    _fold,
    pta_build,
    quotient,
)
from .realize import _fixpoint, fstar_labels, p_realizable


class NotMinimalError(ValueError):
    """Characteristic samples are only defined for minimal machines."""


@dataclass
class GenEvent:
    """One iteration of the merging loop, for logs and tests."""

    state: int
    rejected_merge: tuple[int, ...]
    rejected_realizability: tuple[int, ...]
    candidates: tuple[int, ...]
    chosen: Optional[int]


@dataclass
class SynthStats:
    k: Optional[int] = None
    ks_tried: tuple[int, ...] = ()
    gen_merges: int = 0
    gen_states: Optional[int] = None
    comp_iterations: int = 0
    fresh_states: int = 0
    wall_time: float = 0.0
    gen_trace: list = field(default_factory=list)


@dataclass
class SynthResult:
    status: str  # "machine" | "unreal" | "unknown"
    machine: Optional[Mealy]
    stats: SynthStats
    reason: Optional[str] = None

    def __post_init__(self):
        assert self.status in ("machine", "unreal", "unknown")
        assert (self.machine is not None) == (self.status == "machine")
        if self.machine is not None:
            assert self.machine.is_complete


# -- strategies --------------------------------------------------------------


def _minimal_by_label(items, label_of, tie_key):
    """Entries whose label no other entry strictly undercuts; least tie key."""
    minimal = []
    for x in items:
        fx = label_of(x)
        if any(cf_leq(label_of(y), fx) and label_of(y) != fx for y in items):
            continue
        minimal.append(x)
    return min(minimal, key=tie_key)


def sigma_g_min_cf(machine: PreMealy, state: int, examples, candidates, ctx, labels):
    """Merge with a candidate whose label is pointwise minimal."""
    return _minimal_by_label(candidates, lambda c: labels[c], lambda c: c)


def sigma_g_first(machine, state, examples, candidates, ctx, labels):
    return candidates[0]


def sigma_c_lazy_min_cf(machine: PreMealy, state: int, i_idx: int, candidates, ctx, labels):
    """Reuse an existing state when possible; prefer minimal labels."""
    ab = machine.alphabet
    pool = [c for c in candidates if c[1] is not None] or candidates

    def label_of(c):
        o, dst = c
        if dst is not None:
            return labels[dst]
        return cf_step(ctx.ucw, ctx.k, labels[state], ab.letter_index(i_idx, o))

    return _minimal_by_label(pool, label_of, lambda c: (c[1] if c[1] is not None else machine.n, c[0]))


def sigma_c_lazy_first(machine, state, i_idx, candidates, ctx, labels):
    pool = [c for c in candidates if c[1] is not None] or candidates
    return pool[0]


MERGE_STRATEGIES: dict[str, Callable] = {"min-cf": sigma_g_min_cf, "first": sigma_g_first}
COMPLETE_STRATEGIES: dict[str, Callable] = {
    "lazy-min-cf": sigma_c_lazy_min_cf,
    "lazy-first": sigma_c_lazy_first,
}


# -- phase one: generalization ----------------------------------------------


@dataclass
class GenOutcome:
    machine: Optional[PreMealy]
    reason: Optional[str]
    merges: int = 0
    trace: list = field(default_factory=list)


def gen(examples: ExampleSet, ctx: SafetyContext, sigma_g=sigma_g_min_cf) -> GenOutcome:
    """Fold the example prefix tree as far as realizability allows.

    Examples are processed in length-lexicographic order; each one may be
    merged into one earlier class that stays merge-compatible and keeps
    the quotient completable.  The result accepts every example.
    """
    wit = examples.find_inconsistency()
    if wit is not None:
        return GenOutcome(None, f"inconsistent examples: {wit}")
    pta = pta_build(examples)
    if not p_realizable(pta, ctx):
        return GenOutcome(None, "examples cannot be extended into a machine realizing the specification")
    part = StatePartition.identity(pta)
    merges = 0
    trace: list[GenEvent] = []
    for e in range(1, pta.n):
        roots = sorted({part.find(x) for x in range(e)})
        rejected_merge = []
        rejected_real = []
        candidates = []  # (root, folded partition, quotient machine)
        for r in roots:
            folded, mealy_ok, _ = _fold(pta, part, e, r)
            if not mealy_ok:
                rejected_merge.append(r)
                continue
            q = quotient(pta, folded)
            if p_realizable(q, ctx):
                candidates.append((r, folded, q))
            else:
                rejected_real.append(r)
        chosen = None
        if candidates:
            cur = quotient(pta, part)
            labels = fstar_labels(cur, ctx)
            state_of_root = {root: idx for idx, root in enumerate(sorted({part.find(x) for x in range(pta.n)}))}
            cand_states = [state_of_root[r] for r, _, _ in candidates]
            pick = sigma_g(cur, state_of_root[part.find(e)], examples, cand_states, ctx, labels)
            r, folded, _ = candidates[cand_states.index(pick)]
            chosen = r
            if part.find(e) != part.find(r):
                merges += 1
            part = folded
        trace.append(
            GenEvent(e, tuple(rejected_merge), tuple(rejected_real), tuple(c[0] for c in candidates), chosen)
        )
    return GenOutcome(quotient(pta, part), None, merges, trace)


# -- phase two: completion ----------------------------------------------------


@dataclass
class CompOutcome:
    machine: Optional[Mealy]
    reason: Optional[str]
    iterations: int = 0
    fresh_states: int = 0


def comp(p: PreMealy, ctx: SafetyContext, sigma_c=sigma_c_lazy_min_cf, max_iterations: Optional[int] = None) -> CompOutcome:
    """Fill every hole with a realizability-preserving transition.

    Holes are taken in breadth-first order, inputs in letter order.  A
    candidate is any (output, existing state or fresh) whose added
    transition keeps the machine completable; the invariant guarantees at
    least one exists.  Lazy strategies make the loop terminate.
    """
    if not p_realizable(p, ctx):
        return CompOutcome(None, "machine cannot be completed into one realizing the specification")
    ab = p.alphabet
    n_in = len(ab.input_vals)
    n_out = len(ab.output_vals)
    m = PreMealy(ab, p.n, p.initial, p.trans, p.labels)
    labels = fstar_labels(m, ctx)
    iterations = 0
    fresh = 0
    if max_iterations is None:
        # antichains of reach sets can strictly grow at most once per
        # counting function, each growth opening n_in - 1 extra holes
        chains = (ctx.k + 3) ** ctx.ucw.n
        max_iterations = len(p.holes()) + (n_in + 1) * (chains + 1)
    while True:
        holes = m.holes()
        if not holes:
            break
        q, i = holes[0]
        candidates = []
        fits = {}
        for dst in range(m.n):
            for o in range(n_out):
                got = _try_extend(m, labels, q, i, o, dst, ctx)
                if got is not None:
                    candidates.append((o, dst))
                    fits[(o, dst)] = got
        for o in range(n_out):
            got = _try_extend(m, labels, q, i, o, None, ctx)
            if got is not None:
                candidates.append((o, None))
                fits[(o, None)] = got
        assert candidates, "completable machine must admit a candidate transition"
        o, dst = sigma_c(m, q, i, candidates, ctx, labels)
        m, labels = fits[(o, dst)]
        iterations += 1
        if dst is None:
            fresh += 1
        assert iterations <= max_iterations, "completion exceeded its termination bound"
    return CompOutcome(m.to_mealy(), None, iterations, fresh)


def _try_extend(m: PreMealy, labels, q: int, i: int, o: int, dst: Optional[int], ctx: SafetyContext):
    """Add one transition and re-check completability incrementally.

    Labels only grow when a machine grows, so the current labels seed the
    fixpoint and only the source state is dirty.
    """
    m2 = m.extended(q, i, o, dst)
    seed = list(labels) + [cf_bottom(ctx.ucw.n)] * (m2.n - m.n)
    new_labels, ok = _fixpoint(m2, ctx.ucw, ctx.k, labels=seed, dirty=[q], prune=ctx.member_below)
    if not ok:
        return None
    return m2, new_labels


# -- the two-phase algorithm ---------------------------------------------------


def synth_safe(examples: ExampleSet, ctx: SafetyContext, sigma_g=sigma_g_min_cf, sigma_c=sigma_c_lazy_min_cf) -> SynthResult:
    """Generalize then complete, against one safety game."""
    start = time.perf_counter()
    stats = SynthStats(k=ctx.k)
    g = gen(examples, ctx, sigma_g)
    stats.gen_trace = g.trace
    stats.gen_merges = g.merges
    if g.machine is None:
        stats.wall_time = time.perf_counter() - start
        return SynthResult("unreal", None, stats, g.reason)
    stats.gen_states = g.machine.n
    c = comp(g.machine, ctx, sigma_c)
    stats.comp_iterations = c.iterations
    stats.fresh_states = c.fresh_states
    stats.wall_time = time.perf_counter() - start
    if c.machine is None:
        return SynthResult("unreal", None, stats, c.reason)
    return SynthResult("machine", c.machine, stats)


def theoretical_completeness_bound(a: UCW, examples: ExampleSet) -> int:
    """Visit bound at which a failed search proves unrealizability.

    Conservative concrete instantiation of the safety-reduction bound for
    machines of the guaranteed solution size; astronomically large beyond
    toy automata, which is why the default driver stops at max_k instead.
    """
    n = a.n
    m = max(1, len(examples.prefixes()))
    n_in = max(1, len(a.alphabet.input_vals))
    return n * m * n_in * (2 * n * (n ** (2 * n + 2) + 1)) + n


def synth_learn(
    examples: ExampleSet,
    a: UCW,
    sigma_g=sigma_g_min_cf,
    sigma_c=sigma_c_lazy_min_cf,
    max_k: int = 10,
    complete_bound: bool = False,
    on_context=None,
) -> SynthResult:
    """Try safety games of increasing visit bound k = 0, 1, 2, ...

    Stops at the first bound admitting a machine.  Exhausting `max_k`
    yields "unknown" (the theoretical completeness bound is far larger);
    with `complete_bound` the search runs all the way to that bound and a
    failure is a definite "unreal".  Inconsistent examples are unreal at
    every bound and reported directly.
    """
    start = time.perf_counter()
    wit = examples.find_inconsistency()
    if wit is not None:
        stats = SynthStats(wall_time=time.perf_counter() - start)
        return SynthResult("unreal", None, stats, f"inconsistent examples: {wit}")
    limit = theoretical_completeness_bound(a, examples) if complete_bound else max_k
    tried = []
    for k in range(limit + 1):
        ctx = SafetyContext.solve(a, k)
        if on_context is not None:
            on_context(ctx)
        tried.append(k)
        res = synth_safe(examples, ctx, sigma_g, sigma_c)
        if res.status == "machine":
            res.stats.ks_tried = tuple(tried)
            res.stats.wall_time = time.perf_counter() - start
            return res
    stats = SynthStats(ks_tried=tuple(tried), wall_time=time.perf_counter() - start)
    if complete_bound:
        return SynthResult("unreal", None, stats, f"no machine up to the completeness bound k={limit}")
    return SynthResult("unknown", None, stats, f"no machine up to k={limit}; raise max_k or use the completeness bound")


# -- characteristic samples ----------------------------------------------------


def _equivalence_classes(t: Mealy) -> list[int]:
    """Moore partition refinement on output signatures."""
    n_in = len(t.alphabet.input_vals)
    cls = [0] * t.n
    sigs = {}
    for q in range(t.n):
        sig = tuple(t.trans[q][i][0] for i in range(n_in))
        cls[q] = sigs.setdefault(sig, len(sigs))
    while True:
        sigs = {}
        nxt = []
        for q in range(t.n):
            sig = (cls[q], tuple(cls[t.trans[q][i][1]] for i in range(n_in)))
            nxt.append(sigs.setdefault(sig, len(sigs)))
        if nxt == cls:
            return cls
        cls = nxt


def _access_words(t: Mealy) -> list[tuple[int, ...]]:
    """Shortest-then-lexicographic input word reaching each state."""
    n_in = len(t.alphabet.input_vals)
    access: list = [None] * t.n
    access[t.initial] = ()
    queue = [t.initial]
    while queue:
        q = queue.pop(0)
        for i in range(n_in):
            dst = t.trans[q][i][1]
            if access[dst] is None:
                access[dst] = access[q] + (i,)
                queue.append(dst)
    return access


def _distinguishing_word(t: Mealy, x: int, y: int) -> tuple[int, ...]:
    """Shortest-then-lexicographic input word on which x and y differ."""
    n_in = len(t.alphabet.input_vals)
    seen = {frozenset((x, y))}
    queue = [((), x, y)]
    while queue:
        word, a, b = queue.pop(0)
        for i in range(n_in):
            oa, da = t.trans[a][i]
            ob, db = t.trans[b][i]
            if oa != ob:
                return word + (i,)
            key = frozenset((da, db))
            if da != db and key not in seen:
                seen.add(key)
                queue.append((word + (i,), da, db))
    raise NotMinimalError(f"states {x} and {y} are equivalent")


def _io_image(t: Mealy, inputs: tuple[int, ...]):
    ab = t.alphabet
    word = []
    q = t.initial
    for i in inputs:
        o, q = t.trans[q][i]
        word.append((ab.input_vals[i], ab.output_vals[o]))
    return tuple(word)


def characteristic_sample(t: Mealy) -> ExampleSet:
    """Examples that force the merging phase to reproduce `t` exactly:
    one word per transition plus, per state pair, the access word of one
    extended by their minimal distinguishing word.

    Only defined for minimal machines (reachable, pairwise distinguishable).
    """
    access = _access_words(t)
    if any(wv is None for wv in access):
        raise NotMinimalError("machine has unreachable states")
    cls = _equivalence_classes(t)
    if len(set(cls)) != t.n:
        x, y = next((x, y) for x in range(t.n) for y in range(x + 1, t.n) if cls[x] == cls[y])
        raise NotMinimalError(f"states {x} and {y} are equivalent")
    n_in = len(t.alphabet.input_vals)
    words = []
    for q in range(t.n):
        for i in range(n_in):
            words.append(_io_image(t, access[q] + (i,)))
    n = t.n
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            d = _distinguishing_word(t, x, y)
            assert len(d) <= n * n
            words.append(_io_image(t, access[x] + d))
    sample = ExampleSet(words, t.alphabet)
    assert len(words) <= t.n_transitions + n * n
    assert all(len(w) <= 2 * (n + n * n) for w in words)
    return sample
