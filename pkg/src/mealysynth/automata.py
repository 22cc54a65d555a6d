"""Büchi and universal co-Büchi automata over input/output letters.

Nondeterministic Büchi automata (NBA) are read existentially, universal
co-Büchi automata (UCW) universally: a UCW accepts a word iff every run
visits its counted states finitely often.  UCWs are complete by invariant
(every state has a successor on every letter).

The LTL translation is a tableau construction producing a generalized
Büchi automaton that is degeneralized, pruned and reduced; its only
correctness contract is semantic agreement with the lasso evaluator,
which the tests enforce.  `ucw_of_formula` negates the formula, splits it
into conjuncts, and takes the disjoint union of one co-Büchi component
per conjunct (conjunction is union under the universal interpretation).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .ltl import (
    Alphabet,
    And,
    Atom,
    FalseF,
    Formula,
    IOLetter,
    LassoWord,
    Next,
    Not,
    Or,
    Release,
    TrueF,
    Until,
    Always,
    formula_str,
    is_nnf,
    to_nnf,
)
from .machines import PreMealy


class TranslationTooLargeError(RuntimeError):
    """The tableau construction exceeded the configured state cap."""


class AutomatonFormatError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class NBA:
    """Nondeterministic Büchi automaton; transitions may be missing."""

    def __init__(self, alphabet: Alphabet, n: int, initial, trans, accepting):
        self.alphabet = alphabet
        self.n = n
        self.initial = frozenset(initial)
        self.trans: list[list[tuple[int, ...]]] = [[tuple(row) for row in state_rows] for state_rows in trans]
        self.accepting = frozenset(accepting)
        assert self.initial and all(0 <= q < n for q in self.initial)
        assert len(self.trans) == n and all(len(rows) == len(alphabet.letters) for rows in self.trans)

    @property
    def is_complete(self) -> bool:
        return all(all(row for row in rows) for rows in self.trans)

    def __repr__(self):
        return f"<NBA {self.n} states, {len(self.accepting)} accepting>"


class UCW:
    """Universal co-Büchi automaton; complete, with counted (color-1) states."""

    def __init__(self, alphabet: Alphabet, n: int, initial, trans, counted):
        self.alphabet = alphabet
        self.n = n
        self.initial = frozenset(initial)
        self.trans = [[tuple(row) for row in state_rows] for state_rows in trans]
        self.counted = frozenset(counted)
        assert self.initial and all(0 <= q < n for q in self.initial)
        assert self.counted <= set(range(n))
        for q, rows in enumerate(self.trans):
            assert len(rows) == len(alphabet.letters)
            for letter, row in enumerate(rows):
                if not row:
                    raise ValueError(f"UCW incomplete: state {q} has no successor on letter {letter}")

    def __repr__(self):
        return f"<UCW {self.n} states, {len(self.counted)} counted>"


# -- tableau construction ---------------------------------------------------


@dataclass
class _Node:
    nid: int
    incoming: set = field(default_factory=set)
    new: set = field(default_factory=set)
    old: frozenset = frozenset()
    next: frozenset = frozenset()


_INIT = -1

_fkey_cache: dict = {}


def _fkey(f: Formula) -> str:
    """Stable total order on formulas, independent of hash randomization."""
    s = _fkey_cache.get(f)
    if s is None:
        s = formula_str(f)
        _fkey_cache[f] = s
    return s


def _literal(f: Formula) -> bool:
    return isinstance(f, (TrueF, FalseF, Atom)) or (isinstance(f, Not) and isinstance(f.child, Atom))


def _expansion_rank(f: Formula) -> int:
    """Process non-splitting obligations first; splits duplicate the rest."""
    if _literal(f):
        return 0
    if isinstance(f, (And, Next)):
        return 1
    return 2


def _tableau_nodes(f: Formula, cap: int) -> list[_Node]:
    nodes: list[_Node] = []
    by_key: dict[tuple, _Node] = {}
    counter = [0]
    work_cap = max(1_000_000, 200 * cap)

    def fresh(incoming, new, old, nxt) -> _Node:
        counter[0] += 1
        if counter[0] > work_cap:
            raise TranslationTooLargeError(f"translation exceeded {work_cap} tableau expansions for {formula_str(f)}")
        return _Node(counter[0], set(incoming), set(new), frozenset(old), frozenset(nxt))

    stack = [fresh({_INIT}, {f}, (), ())]
    while stack:
        node = stack.pop()
        if not node.new:
            key = (node.old, node.next)
            hit = by_key.get(key)
            if hit is not None:
                hit.incoming |= node.incoming
                continue
            if len(nodes) >= cap:
                raise TranslationTooLargeError(f"translation exceeded {cap} tableau nodes for {formula_str(f)}")
            by_key[key] = node
            nodes.append(node)
            stack.append(fresh({node.nid}, set(node.next), (), ()))
            continue
        eta = min(node.new, key=lambda g: (_expansion_rank(g), _fkey(g)))
        node.new.discard(eta)
        if eta in node.old:
            stack.append(node)
            continue
        if _literal(eta):
            if isinstance(eta, FalseF) or _neg_literal(eta) in node.old:
                continue  # contradictory node, discard
            node.old = node.old | {eta}
            stack.append(node)
        elif isinstance(eta, And):
            node.new |= {eta.left, eta.right} - node.old
            node.old = node.old | {eta}
            stack.append(node)
        elif isinstance(eta, Next):
            node.old = node.old | {eta}
            node.next = node.next | {eta.child}
            stack.append(node)
        elif isinstance(eta, (Or, Until, Release)):
            new1, new2, nxt1 = _split(eta)
            n1 = fresh(node.incoming, node.new | (new1 - node.old), node.old | {eta}, node.next | nxt1)
            n2 = fresh(node.incoming, node.new | (new2 - node.old), node.old | {eta}, node.next)
            stack.append(n1)
            stack.append(n2)
        else:
            raise ValueError(f"formula not in negation normal form: {formula_str(eta)}")
    return nodes


def _neg_literal(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f.child
    if isinstance(f, TrueF):
        return FalseF()
    if isinstance(f, FalseF):
        return TrueF()
    return Not(f)


def _split(eta: Formula):
    """Expansion of disjunctive nodes: (new1, new2, next1)."""
    if isinstance(eta, Or):
        return {eta.left}, {eta.right}, set()
    if isinstance(eta, Until):  # l U r  ==  r | (l & X(l U r))
        return {eta.left}, {eta.right}, {eta}
    # l R r  ==  (r & l) | (r & X(l R r))
    return {eta.right}, {eta.right, eta.left}, {eta}


def _until_subformulas(f: Formula) -> list[Formula]:
    seen: dict[Formula, None] = {}

    def walk(g: Formula):
        if isinstance(g, Until):
            seen.setdefault(g)
        for name in ("child", "left", "right"):
            sub = getattr(g, name, None)
            if sub is not None:
                walk(sub)

    walk(f)
    return list(seen)


def ltl_to_nba(f: Formula, alphabet: Alphabet, state_cap: int = 20000) -> NBA:
    """Tableau translation; `f` must be in negation normal form."""
    if not is_nnf(f):
        raise ValueError("ltl_to_nba expects a formula in negation normal form")
    nodes = _tableau_nodes(f, state_cap)
    untils = _until_subformulas(f)
    n_letters = len(alphabet.letters)

    # letters consistent with each node's literal constraints
    def letters_of(node: _Node) -> list[int]:
        pos = {g.name for g in node.old if isinstance(g, Atom)}
        neg = {g.child.name for g in node.old if isinstance(g, Not)}
        out = []
        for idx, (i, o) in enumerate(alphabet.letters):
            held = i | o
            if pos <= held and not (neg & held):
                out.append(idx)
        return out

    # generalized automaton over nodes plus a distinct initial state
    ids = {node.nid: k for k, node in enumerate(nodes)}
    n = len(nodes) + 1
    init_state = len(nodes)
    gtrans: list[list[set]] = [[set() for _ in range(n_letters)] for _ in range(n)]
    for node in nodes:
        k = ids[node.nid]
        letters = letters_of(node)
        for src in node.incoming:
            s = init_state if src == _INIT else ids[src]
            for idx in letters:
                gtrans[s][idx].add(k)
    acc_sets = []
    for u in untils:
        sat = {ids[node.nid] for node in nodes if u.right in node.old or u not in node.old}
        sat.add(init_state)
        acc_sets.append(sat)

    if len(acc_sets) <= 1:
        accepting = acc_sets[0] - {init_state} if acc_sets else set(range(n))
        nba = NBA(alphabet, n, {init_state}, gtrans, accepting)
    else:
        m = len(acc_sets)
        nn = n * m
        trans = [[set() for _ in range(n_letters)] for _ in range(nn)]
        for q in range(n):
            for i in range(m):
                j = (i + 1) % m if q in acc_sets[i] else i
                for idx in range(n_letters):
                    trans[q * m + i][idx] = {q2 * m + j for q2 in gtrans[q][idx]}
        accepting = {q * m for q in acc_sets[0] if q != init_state}
        nba = NBA(alphabet, nn, {init_state * m}, trans, accepting)
    return _reduce_nba(nba)


def _reduce_nba(a: NBA) -> NBA:
    a = _trim_nba(a)
    a = _bisim_merge(a)
    return a


def _trim_nba(a: NBA) -> NBA:
    """Keep states that are reachable and can reach an accepting cycle."""
    succ = [sorted({q for row in rows for q in row}) for rows in a.trans]
    reach = set()
    stack = list(a.initial)
    while stack:
        q = stack.pop()
        if q in reach:
            continue
        reach.add(q)
        stack.extend(succ[q])

    # Tarjan SCC, iterative
    index = {}
    low = {}
    on_stack = set()
    scc_of = {}
    sccs: list[list[int]] = []
    stack2: list[int] = []
    for root in sorted(reach):
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = len(index)
        stack2.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in reach:
                    continue
                if w not in index:
                    index[w] = low[w] = len(index)
                    stack2.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack2.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    scc_of[w] = len(sccs)
                    if w == v:
                        break
                sccs.append(comp)

    good_scc = set()
    for k, comp in enumerate(sccs):
        if not any(q in a.accepting for q in comp):
            continue
        members = set(comp)
        has_edge = any(w in members for q in comp for w in succ[q])
        if has_edge:
            good_scc.add(k)
    useful = set()
    for q in sorted(reach, key=lambda q: -index[q]):  # reverse topological-ish
        if scc_of[q] in good_scc or any(w in useful for w in succ[q]):
            useful.add(q)
    changed = True
    while changed:  # close under reachability of useful
        changed = False
        for q in reach:
            if q not in useful and any(w in useful for w in succ[q]):
                useful.add(q)
                changed = True

    keep = sorted(useful)
    if not keep or not (a.initial & useful):
        empty_rows = [[() for _ in a.alphabet.letters]]
        return NBA(a.alphabet, 1, {0}, empty_rows, set())
    rename = {q: k for k, q in enumerate(keep)}
    trans = [[tuple(sorted(rename[w] for w in row if w in useful)) for row in a.trans[q]] for q in keep]
    initial = {rename[q] for q in a.initial if q in useful}
    accepting = {rename[q] for q in a.accepting if q in useful}
    return NBA(a.alphabet, len(keep), initial, trans, accepting)


def _bisim_merge(a: NBA) -> NBA:
    """Quotient by forward bisimulation (partition refinement)."""
    cls = [1 if q in a.accepting else 0 for q in range(a.n)]
    while True:
        sigs = {}
        new_cls = []
        for q in range(a.n):
            sig = (cls[q], tuple(frozenset(cls[w] for w in row) for row in a.trans[q]))
            new_cls.append(sigs.setdefault(sig, len(sigs)))
        if new_cls == cls:
            break
        cls = new_cls
    k = len(set(cls))
    if k == a.n:
        return a
    rep: dict[int, int] = {}
    order = []
    for q in range(a.n):
        if cls[q] not in rep:
            rep[cls[q]] = len(order)
            order.append(q)
    trans = [
        [tuple(sorted({rep[cls[w]] for w in row})) for row in a.trans[q]]
        for q in order
    ]
    initial = {rep[cls[q]] for q in a.initial}
    accepting = {rep[cls[q]] for q in a.accepting}
    return NBA(a.alphabet, k, initial, trans, accepting)


def complete_nba(a: NBA) -> NBA:
    """Add one non-accepting absorbing sink for missing transitions."""
    if a.is_complete:
        return a
    sink = a.n
    trans = [[row if row else (sink,) for row in rows] for rows in a.trans]
    trans.append([(sink,)] * len(a.alphabet.letters))
    return NBA(a.alphabet, a.n + 1, a.initial, trans, a.accepting)


def ucw_from_nba(a: NBA) -> UCW:
    """Reinterpret a complete NBA universally; its accepting states are counted."""
    a = complete_nba(a)
    return UCW(a.alphabet, a.n, a.initial, a.trans, a.accepting)


def _conjuncts(f: Formula) -> list[Formula]:
    """Split into conjuncts, distributing G and | over & where possible."""
    if isinstance(f, And):
        return _conjuncts(f.left) + _conjuncts(f.right)
    if isinstance(f, Always):
        subs = _conjuncts(f.child)
        if len(subs) > 1:
            return [c for s in subs for c in _conjuncts(Always(s))]
    if isinstance(f, Or):
        ls, rs = _conjuncts(f.left), _conjuncts(f.right)
        if len(ls) > 1 or len(rs) > 1:
            return [c for x in ls for y in rs for c in _conjuncts(Or(x, y))]
    return [f]


def ucw_of_formula(f: Formula, alphabet: Alphabet, state_cap: int = 20000) -> UCW:
    """UCW whose universal language is exactly the models of `f`.

    Built per conjunct: the negated conjunct's Büchi automaton, completed,
    is one co-Büchi component; the disjoint union of components recognizes
    the conjunction under the universal interpretation.
    """
    parts = []
    for conj in _conjuncts(f):
        nba = complete_nba(ltl_to_nba(to_nnf(Not(conj)), alphabet, state_cap))
        parts.append(nba)
    n_letters = len(alphabet.letters)
    total = sum(p.n for p in parts)
    trans: list[list[tuple[int, ...]]] = []
    initial: set[int] = set()
    counted: set[int] = set()
    base = 0
    for p in parts:
        for q in range(p.n):
            trans.append([tuple(w + base for w in row) for row in p.trans[q]])
        initial |= {q + base for q in p.initial}
        counted |= {q + base for q in p.accepting}
        base += p.n
    return UCW(alphabet, total, initial, trans, counted)


# -- text format ------------------------------------------------------------


def serialize_automaton(a: UCW) -> str:
    lines = [
        "inputs: " + " ".join(a.alphabet.inputs),
        "outputs: " + " ".join(a.alphabet.outputs),
        "initial: " + " ".join(f"q{q}" for q in sorted(a.initial)),
        "counted: " + " ".join(f"q{q}" for q in sorted(a.counted)),
    ]
    for q in range(a.n):
        for idx, (i, o) in enumerate(a.alphabet.letters):
            row = a.trans[q][idx]
            dsts = ",".join(f"q{w}" for w in row)
            lines.append(
                "q%d (%s)/(%s) -> %s" % (q, " ".join(sorted(i)), " ".join(sorted(o)), dsts)
            )
    return "\n".join(lines) + "\n"


def parse_automaton(text: str) -> UCW:
    """Parse the UCW text format; completeness is checked on exit."""
    inputs = outputs = None
    initial_names: list[str] = []
    counted_names: list[str] = []
    raw = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("inputs:"):
            inputs = tuple(line[len("inputs:"):].split())
        elif line.startswith("outputs:"):
            outputs = tuple(line[len("outputs:"):].split())
        elif line.startswith("initial:"):
            initial_names = line[len("initial:"):].split()
        elif line.startswith("counted:"):
            counted_names = line[len("counted:"):].split()
        else:
            try:
                head, dsts = line.split("->")
                src, io = head.split(None, 1)
                i_txt, o_txt = io.split("/")
            except ValueError:
                raise AutomatonFormatError(f"malformed transition {line!r}", lineno) from None
            raw.append((lineno, src.strip(), i_txt.strip(), o_txt.strip(), dsts.strip()))
    if inputs is None or outputs is None:
        raise AutomatonFormatError("missing inputs:/outputs: header", 1)
    if not initial_names:
        raise AutomatonFormatError("missing or empty initial: header", 1)
    ab = Alphabet(inputs, outputs)
    names: dict[str, int] = {}

    def state(tok: str) -> int:
        if tok not in names:
            names[tok] = len(names)
        return names[tok]

    for _, src, _, _, _ in raw:
        state(src)
    for _, _, _, _, dsts in raw:
        for tok in dsts.split(","):
            if tok.strip():
                state(tok.strip())
    for tok in initial_names + counted_names:
        state(tok)
    parsed = []
    for lineno, src, i_txt, o_txt, dsts in raw:
        i_val = _parse_paren_set(i_txt, ab.inputs, lineno)
        o_val = _parse_paren_set(o_txt, ab.outputs, lineno)
        succs = [state(tok.strip()) for tok in dsts.split(",") if tok.strip()]
        if not succs:
            raise AutomatonFormatError("transition with no successors", lineno)
        parsed.append((lineno, state(src), ab.letter_index(ab.input_index(i_val), ab.output_index(o_val)), succs))
    n = len(names)
    trans: list[list[tuple[int, ...]]] = [[() for _ in ab.letters] for _ in range(n)]
    for lineno, src, letter, succs in parsed:
        if trans[src][letter]:
            raise AutomatonFormatError("duplicate transition line for the same state and letter", lineno)
        trans[src][letter] = tuple(sorted(set(succs)))
    for tok, q in names.items():
        for idx in range(len(ab.letters)):
            if not trans[q][idx]:
                i, o = ab.letters[idx]
                raise AutomatonFormatError(
                    f"state {tok} has no transition on letter ({' '.join(sorted(i))})/({' '.join(sorted(o))})"
                )
    return UCW(ab, n, {names[t] for t in initial_names}, trans, {names[t] for t in counted_names})


def _parse_paren_set(text: str, declared, lineno: int) -> frozenset:
    if not (text.startswith("(") and text.endswith(")")):
        raise AutomatonFormatError(f"expected a (…) proposition set, got {text!r}", lineno)
    items = [t for t in text[1:-1].replace(",", " ").split() if t]
    for t in items:
        if t not in declared:
            raise AutomatonFormatError(f"undeclared proposition {t!r}", lineno)
    return frozenset(items)


# -- machine x NBA product emptiness ----------------------------------------


def product_empty(m: PreMealy, b: NBA) -> bool:
    """True iff no run of the complete machine m lies in L(b) (nested DFS)."""
    return product_counterexample(m, b) is None


def product_counterexample(m: PreMealy, b: NBA) -> Optional[LassoWord]:
    """A lasso word of L(m) ∩ L(b), or None when the product is empty."""
    assert m.is_complete, "product_empty needs a complete machine"
    assert m.alphabet == b.alphabet
    ab = m.alphabet
    n_out = len(ab.output_vals)

    def succs(node):
        mq, bq = node
        for i in sorted(m.trans[mq]):
            o, mdst = m.trans[mq][i]
            letter = (ab.input_vals[i], ab.output_vals[o])
            for bdst in b.trans[bq][i * n_out + o]:
                yield (mdst, bdst), letter

    blue: set = set()
    red: set = set()
    blue_parent: dict = {}

    for b0 in sorted(b.initial):
        root = (m.initial, b0)
        if root in blue:
            continue
        blue.add(root)
        blue_parent[root] = None
        stack = [(root, succs(root))]
        while stack:
            node, it = stack[-1]
            advanced = False
            for child, letter in it:
                if child not in blue:
                    blue.add(child)
                    blue_parent[child] = (node, letter)
                    stack.append((child, succs(child)))
                    advanced = True
                    break
            if advanced:
                continue
            stack.pop()
            if node[1] in b.accepting:
                loop = _red_search(node, succs, red)
                if loop is not None:
                    prefix = []
                    cur = node
                    while blue_parent[cur] is not None:
                        cur, letter = blue_parent[cur]
                        prefix.append(letter)
                    prefix.reverse()
                    return LassoWord(tuple(prefix), tuple(loop))
    return None


def _red_search(seed, succs, red: set) -> Optional[list[IOLetter]]:
    """Inner DFS: a cycle from seed back to seed avoiding already-red states."""
    parent: dict = {}
    stack = [(seed, succs(seed))]
    red.add(seed)
    while stack:
        node, it = stack[-1]
        advanced = False
        for child, letter in it:
            if child == seed:
                loop = [letter]
                cur = node
                while cur != seed:
                    cur, lt = parent[cur]
                    loop.append(lt)
                loop.reverse()
                return loop
            if child not in red:
                red.add(child)
                parent[child] = (node, letter)
                stack.append((child, succs(child)))
                advanced = True
                break
        if not advanced:
            stack.pop()
    return None
