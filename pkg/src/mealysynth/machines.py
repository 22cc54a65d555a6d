"""Mealy machines with holes, prefix trees, and state merging.

A `PreMealy` is a deterministic transducer whose transition function may be
partial; a `Mealy` is one with no holes.  Transitions are stored per state
as {input index: (output index, successor)} over the machine's `Alphabet`.
States are integers; the merging machinery works on `StatePartition`s of a
fixed machine's states (RPNI-style congruence folding).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .ltl import Alphabet, IOWord, Valuation, word_key


class InconsistentExamplesError(ValueError):
    """Example set maps one input history to two different outputs."""

    def __init__(self, witness: "ConsistencyWitness"):
        super().__init__(
            "inconsistent examples: after %r on input %r both %r and %r occur"
            % (witness.prefix, sorted(witness.inp), sorted(witness.out1), sorted(witness.out2))
        )
        self.witness = witness


class NonCongruenceError(ValueError):
    """Partition is not a Mealy-congruence; carries a witness triple."""

    def __init__(self, x: int, y: int, inp: int, kind: str):
        super().__init__(f"states {x} and {y} conflict on input index {inp} ({kind})")
        self.witness = (x, y, inp, kind)


@dataclass(frozen=True)
class ConsistencyWitness:
    prefix: IOWord
    inp: Valuation
    out1: Valuation
    out2: Valuation


class ExampleSet:
    """User-provided finite IO words, with their even-length prefix closure."""

    def __init__(self, words, alphabet: Alphabet):
        self.alphabet = alphabet
        seen = {}
        for w in words:
            w = tuple((frozenset(i), frozenset(o)) for i, o in w)
            for i, o in w:
                if not i <= set(alphabet.inputs) or not o <= set(alphabet.outputs):
                    raise ValueError(f"letter ({sorted(i)},{sorted(o)}) not over the declared propositions")
            seen[w] = None
        self.words = tuple(sorted(seen, key=lambda w: word_key(w, alphabet)))

    def __len__(self):
        return len(self.words)

    def __iter__(self) -> Iterator[IOWord]:
        return iter(self.words)

    def prefixes(self) -> tuple[IOWord, ...]:
        """All even-length prefixes (including the empty word), ll-sorted."""
        pref = {(): None}
        for w in self.words:
            for k in range(1, len(w) + 1):
                pref[w[:k]] = None
        return tuple(sorted(pref, key=lambda w: word_key(w, self.alphabet)))

    def find_inconsistency(self) -> Optional[ConsistencyWitness]:
        seen: dict = {}
        for w in self.words:
            for k in range(len(w)):
                i, o = w[k]
                key = (w[:k], i)
                if key in seen and seen[key] != o:
                    return ConsistencyWitness(w[:k], i, seen[key], o)
                seen[key] = o
        return None

    def is_consistent(self) -> bool:
        return self.find_inconsistency() is None


class PreMealy:
    """Deterministic transducer, possibly with missing transitions."""

    def __init__(self, alphabet: Alphabet, n: int, initial: int, trans, labels=None):
        self.alphabet = alphabet
        self.n = n
        self.initial = initial
        self.trans: list[dict[int, tuple[int, int]]] = [dict(t) for t in trans]
        self.labels = list(labels) if labels is not None else [f"q{i}" for i in range(n)]
        assert 0 <= initial < n
        for t in self.trans:
            for i, (o, dst) in t.items():
                assert 0 <= dst < n and 0 <= i < len(alphabet.input_vals) and 0 <= o < len(alphabet.output_vals)

    # -- basic queries ----------------------------------------------------

    def step(self, q: int, i_idx: int) -> Optional[tuple[int, int]]:
        return self.trans[q].get(i_idx)

    def step_val(self, q: int, i_val: Valuation) -> Optional[tuple[Valuation, int]]:
        hit = self.trans[q].get(self.alphabet.input_index(i_val))
        if hit is None:
            return None
        o, dst = hit
        return self.alphabet.output_vals[o], dst

    def transitions(self) -> Iterator[tuple[int, int, int, int]]:
        """(state, input index, output index, successor), deterministic order."""
        for q in range(self.n):
            for i in sorted(self.trans[q]):
                o, dst = self.trans[q][i]
                yield q, i, o, dst

    @property
    def n_transitions(self) -> int:
        return sum(len(t) for t in self.trans)

    def holes(self) -> list[tuple[int, int]]:
        """Missing (state, input index) pairs, BFS order from the initial state."""
        order = self.bfs_order()
        n_in = len(self.alphabet.input_vals)
        out = []
        for q in order:
            for i in range(n_in):
                if i not in self.trans[q]:
                    out.append((q, i))
        return out

    def bfs_order(self) -> list[int]:
        seen = [False] * self.n
        order = [self.initial]
        seen[self.initial] = True
        head = 0
        while head < len(order):
            q = order[head]
            head += 1
            for i in sorted(self.trans[q]):
                dst = self.trans[q][i][1]
                if not seen[dst]:
                    seen[dst] = True
                    order.append(dst)
        return order

    @property
    def is_complete(self) -> bool:
        n_in = len(self.alphabet.input_vals)
        return all(len(t) == n_in for t in self.trans)

    def to_mealy(self) -> "Mealy":
        return Mealy(self.alphabet, self.n, self.initial, self.trans, self.labels)

    def extended(self, q: int, i_idx: int, o_idx: int, dst: Optional[int]) -> "PreMealy":
        """Copy with one added transition; dst=None creates a fresh state."""
        assert i_idx not in self.trans[q]
        n = self.n
        trans = [dict(t) for t in self.trans]
        labels = list(self.labels)
        if dst is None:
            dst = n
            n += 1
            trans.append({})
            labels.append(f"q{dst}")
        trans[q][i_idx] = (o_idx, dst)
        return PreMealy(self.alphabet, n, self.initial, trans, labels)

    def __eq__(self, other):
        return (
            isinstance(other, PreMealy)
            and self.alphabet == other.alphabet
            and self.n == other.n
            and self.initial == other.initial
            and self.trans == other.trans
        )

    def __repr__(self):
        return f"<{type(self).__name__} {self.n} states, {self.n_transitions} transitions>"


class Mealy(PreMealy):
    """Hole-free machine: the transition function is total."""

    def __init__(self, alphabet, n, initial, trans, labels=None):
        super().__init__(alphabet, n, initial, trans, labels)
        if not self.is_complete:
            missing = self.holes()[0]
            raise ValueError(f"machine has a hole at state {missing[0]}, input index {missing[1]}")


@dataclass(frozen=True)
class RunOutcome:
    """Result of driving a machine on an input sequence.

    `hole_at` is None for a complete run; otherwise it is the position of
    the first missing transition and `state` the state that lacks it.
    """

    state: int
    output: Optional[Valuation]
    hole_at: Optional[int] = None
    hole_input: Optional[Valuation] = None


def run(m: PreMealy, inputs) -> RunOutcome:
    q = m.initial
    out = None
    for pos, i_val in enumerate(inputs):
        i_val = frozenset(i_val)
        hit = m.step_val(q, i_val)
        if hit is None:
            return RunOutcome(q, out, hole_at=pos, hole_input=i_val)
        out, q = hit
    return RunOutcome(q, out)


def accepts(m: PreMealy, w: IOWord) -> bool:
    """True iff every prefix of w follows a defined transition with matching output."""
    q = m.initial
    for i_val, o_val in w:
        hit = m.step_val(q, frozenset(i_val))
        if hit is None or hit[0] != frozenset(o_val):
            return False
        q = hit[1]
    return True


def pta_build(examples: ExampleSet) -> PreMealy:
    """Tree-shaped machine accepting exactly the prefixes of the examples.

    States are numbered by length-lexicographic order of their access words.
    """
    wit = examples.find_inconsistency()
    if wit is not None:
        raise InconsistentExamplesError(wit)
    prefixes = examples.prefixes()
    index = {w: i for i, w in enumerate(prefixes)}
    ab = examples.alphabet
    trans: list[dict[int, tuple[int, int]]] = [{} for _ in prefixes]
    for w, idx in index.items():
        if w:
            parent = index[w[:-1]]
            i_val, o_val = w[-1]
            trans[parent][ab.input_index(i_val)] = (ab.output_index(o_val), idx)
    return PreMealy(ab, len(prefixes), 0, trans, labels=[str(i) for i in range(len(prefixes))])


# -- state partitions and merging -----------------------------------------


class StatePartition:
    """Disjoint-set partition of a machine's states; treated as a value."""

    def __init__(self, n: int, parent=None):
        self.n = n
        self.parent = list(parent) if parent is not None else list(range(n))

    @classmethod
    def identity(cls, m: PreMealy) -> "StatePartition":
        return cls(m.n)

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def same(self, x: int, y: int) -> bool:
        return self.find(x) == self.find(y)

    def classes(self) -> list[list[int]]:
        """Classes as sorted member lists, ordered by smallest member."""
        buckets: dict[int, list[int]] = {}
        for x in range(self.n):
            buckets.setdefault(self.find(x), []).append(x)
        return sorted(buckets.values(), key=lambda c: c[0])

    def copy(self) -> "StatePartition":
        return StatePartition(self.n, self.parent)

    def __eq__(self, other):
        if not isinstance(other, StatePartition) or self.n != other.n:
            return False
        return self.classes() == other.classes()

    def __repr__(self):
        return "{" + ", ".join("{" + ",".join(map(str, c)) + "}" for c in self.classes()) + "}"


def _fold(m: PreMealy, part: StatePartition, x: int, y: int, order: str = "bfs"):
    """Union the classes of x and y and close under successor propagation.

    Returns (closed partition, mealy_ok, witness).  Output disagreements do
    not stop the closure; they only mark the result as not Mealy-congruent.
    `order` picks the worklist discipline (bfs/dfs); the result is the same
    either way, which the tests check.
    """
    part = part.copy()
    pending: list[tuple[int, int]] = [(x, y)]
    mealy_ok = True
    witness = None
    # per-root view of the class transition table: input -> (output, successor)
    tables: dict[int, dict[int, tuple[int, int]]] = {}
    for q in range(m.n):
        tables.setdefault(part.find(q), {})
    for q in range(m.n):
        root = part.find(q)
        for i, (o, dst) in m.trans[q].items():
            prev = tables[root].get(i)
            if prev is None:
                tables[root][i] = (o, dst)
            else:
                if prev[0] != o and mealy_ok:
                    mealy_ok = False
                    witness = (q, q, i, "output")
                if not part.same(prev[1], dst):
                    pending.append((prev[1], dst))
    while pending:
        a, b = pending.pop(0) if order == "bfs" else pending.pop()
        ra, rb = part.find(a), part.find(b)
        if ra == rb:
            continue
        # union by smaller representative, keeps class naming stable
        if rb < ra:
            ra, rb = rb, ra
        part.parent[rb] = ra
        ta, tb = tables[ra], tables.pop(rb)
        for i, (o, dst) in tb.items():
            if i in ta:
                o2, dst2 = ta[i]
                if o2 != o and mealy_ok:
                    mealy_ok = False
                    witness = (ra, rb, i, "output")
                if not part.same(dst, dst2):
                    pending.append((dst, dst2))
            else:
                ta[i] = (o, dst)
    return part, mealy_ok, witness


def merge_class(m: PreMealy, part: StatePartition, x: int, y: int, order: str = "bfs") -> StatePartition:
    """Coarsest extension of `part` merging x,y that is closed under successors."""
    return _fold(m, part, x, y, order)[0]


def mergeable(m: PreMealy, part: StatePartition, x: int, y: int) -> bool:
    """True iff merging x,y yields a Mealy-congruence (outputs agree classwise)."""
    return _fold(m, part, x, y)[1]


def quotient(m: PreMealy, part: StatePartition) -> PreMealy:
    """Quotient machine; classes become states ordered by smallest member.

    A class transition is defined as soon as any member defines it.  Raises
    `NonCongruenceError` when members disagree on outputs or successor
    classes.
    """
    classes = part.classes()
    class_idx = {part.find(c[0]): k for k, c in enumerate(classes)}
    trans: list[dict[int, tuple[int, int]]] = [{} for _ in classes]
    owner: list[dict[int, int]] = [{} for _ in classes]
    for q in range(m.n):
        k = class_idx[part.find(q)]
        for i, (o, dst) in m.trans[q].items():
            dk = class_idx[part.find(dst)]
            if i in trans[k]:
                o2, dk2 = trans[k][i]
                if o2 != o:
                    raise NonCongruenceError(owner[k][i], q, i, "output")
                if dk2 != dk:
                    raise NonCongruenceError(owner[k][i], q, i, "successor")
            else:
                trans[k][i] = (o, dk)
                owner[k][i] = q
    labels = [",".join(str(x) for x in c) for c in classes]
    init = class_idx[part.find(m.initial)]
    return PreMealy(m.alphabet, len(classes), init, trans, labels)


# -- products with automata ------------------------------------------------


def reach_sets(m: PreMealy, a) -> list[frozenset]:
    """For each machine state, the automaton states reachable along words
    that reach it (least fixpoint of forward propagation).

    `a` is an automaton over the same alphabet with `initial` and indexed
    transitions `a.trans[q][letter_idx]`.
    """
    ab = m.alphabet
    n_out = len(ab.output_vals)
    sets: list[set] = [set() for _ in range(m.n)]
    sets[m.initial] = set(a.initial)
    pending = [m.initial]
    while pending:
        q = pending.pop(0)
        current = frozenset(sets[q])
        for i, (o, dst) in sorted(m.trans[q].items()):
            letter = i * n_out + o
            post = set()
            for s in current:
                post.update(a.trans[s][letter])
            if not post <= sets[dst]:
                sets[dst] |= post
                if dst not in pending:
                    pending.append(dst)
    return [frozenset(s) for s in sets]


# -- rendering and text format ---------------------------------------------


def to_dot(m: PreMealy, name: str = "mealy") -> str:
    """DOT digraph; one edge per transition, holes omitted, stable order."""
    ab = m.alphabet
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __init [shape=point, style=invis];']
    for q in range(m.n):
        lines.append(f'  s{q} [shape=circle, label="{m.labels[q]}"];')
    lines.append(f"  __init -> s{m.initial};")
    for q, i, o, dst in m.transitions():
        label = f"{ab.render_val(ab.input_vals[i], 'in')} / {ab.render_val(ab.output_vals[o], 'out')}"
        lines.append(f'  s{q} -> s{dst} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _render_set(v: Valuation) -> str:
    return "(" + " ".join(sorted(v)) + ")"


def serialize_machine(m: PreMealy) -> str:
    ab = m.alphabet
    lines = [
        "inputs: " + " ".join(ab.inputs),
        "outputs: " + " ".join(ab.outputs),
        f"initial: q{m.initial}",
    ]
    for q, i, o, dst in m.transitions():
        lines.append(f"q{q} {_render_set(ab.input_vals[i])}/{_render_set(ab.output_vals[o])} -> q{dst}")
    return "\n".join(lines) + "\n"


class MachineFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _parse_set(text: str, names, lineno: int) -> frozenset:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise MachineFormatError(f"expected a (…) proposition set, got {text!r}", lineno)
    items = [t for t in text[1:-1].replace(",", " ").split() if t]
    for t in items:
        if t not in names:
            raise MachineFormatError(f"undeclared proposition {t!r}", lineno)
    return frozenset(items)


def parse_machine(text: str) -> PreMealy:
    """Parse the machine text format produced by `serialize_machine`."""
    inputs = outputs = None
    initial_name = None
    raw: list[tuple[int, str, str, str, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("inputs:"):
            inputs = tuple(line[len("inputs:"):].split())
        elif line.startswith("outputs:"):
            outputs = tuple(line[len("outputs:"):].split())
        elif line.startswith("initial:"):
            initial_name = line[len("initial:"):].strip()
        else:
            try:
                head, dst = line.split("->")
                src, io = head.split(None, 1)
                i_txt, o_txt = io.split("/")
            except ValueError:
                raise MachineFormatError(f"malformed transition {line!r}", lineno) from None
            raw.append((lineno, src.strip(), i_txt, o_txt, dst.strip()))
    if inputs is None or outputs is None:
        raise MachineFormatError("missing inputs:/outputs: header", 1)
    if initial_name is None:
        raise MachineFormatError("missing initial: header", 1)
    ab = Alphabet(inputs, outputs)
    names: dict[str, int] = {initial_name: 0}
    for _, src, _, _, dst in raw:
        for s in (src, dst):
            if s not in names:
                names[s] = len(names)
    trans: list[dict[int, tuple[int, int]]] = [{} for _ in names]
    for lineno, src, i_txt, o_txt, dst in raw:
        i_val = _parse_set(i_txt, ab.inputs, lineno)
        o_val = _parse_set(o_txt, ab.outputs, lineno)
        i_idx = ab.input_index(i_val)
        if i_idx in trans[names[src]]:
            raise MachineFormatError(f"duplicate transition from {src} on {i_txt.strip()}", lineno)
        trans[names[src]][i_idx] = (ab.output_index(o_val), names[dst])
    labels = [None] * len(names)
    for s, k in names.items():
        labels[k] = s
    return PreMealy(ab, len(names), 0, trans, labels)


# -- isomorphism ------------------------------------------------------------


def canonical_form(m: PreMealy):
    """Canonical renumbering of the reachable part (BFS, inputs in order)."""
    order = m.bfs_order()
    rename = {q: k for k, q in enumerate(order)}
    shape = []
    for q in order:
        row = tuple((i, o, rename[dst]) for i, (o, dst) in sorted(m.trans[q].items()) if dst in rename)
        shape.append(row)
    return (len(order), tuple(shape))


def machines_isomorphic(m1: PreMealy, m2: PreMealy) -> bool:
    """Equality up to state renaming (machines must be fully reachable)."""
    if m1.alphabet != m2.alphabet or m1.n != m2.n:
        return False
    return canonical_form(m1) == canonical_form(m2)
