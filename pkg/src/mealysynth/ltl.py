"""LTL formulas over input/output atomic propositions.

Provides the proposition universe (`Alphabet`), valuations and letters,
the formula AST, a parser for the concrete grammar, negation normal form,
and an exact evaluator on ultimately periodic (lasso) words.  The lasso
evaluator is the semantic ground truth the rest of the package is tested
against.

One logical time step is one (input valuation, output valuation) pair;
atoms see both halves of the pair.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

Valuation = frozenset  # frozenset[str], props of one side that hold
IOLetter = tuple  # (input Valuation, output Valuation)
IOWord = tuple  # tuple[IOLetter, ...]

RESERVED = {"true", "false", "U", "W", "R", "X", "G", "F"}


class LtlParseError(ValueError):
    """Raised on malformed formula text; carries the offending position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


def _check_names(names: Iterable[str], side: str) -> tuple[str, ...]:
    out = []
    for name in names:
        if not name or not all(c.isalnum() or c == "_" for c in name):
            raise ValueError(f"invalid {side} proposition name: {name!r}")
        if name in RESERVED:
            raise ValueError(f"{side} proposition name {name!r} is reserved")
        out.append(name)
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate {side} proposition names")
    return tuple(sorted(out))


@dataclass(frozen=True)
class Alphabet:
    """Declared input and output propositions, with a fixed letter order.

    Valuations of one side are ordered by their characteristic bit vector
    over the alphabetically sorted proposition names (absent < present);
    letters are ordered input-major.  Every ordering in the package derives
    from this one, which keeps all outputs deterministic.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def __post_init__(self):
        ins = _check_names(self.inputs, "input")
        outs = _check_names(self.outputs, "output")
        if set(ins) & set(outs):
            raise ValueError("input and output propositions must be disjoint")
        object.__setattr__(self, "inputs", ins)
        object.__setattr__(self, "outputs", outs)

    @property
    def props(self) -> frozenset:
        return frozenset(self.inputs) | frozenset(self.outputs)

    def is_input(self, name: str) -> bool:
        return name in self.inputs

    def is_output(self, name: str) -> bool:
        return name in self.outputs

    @staticmethod
    def _valuations(names: tuple[str, ...]) -> tuple[Valuation, ...]:
        vals = [frozenset()]
        for name in names:
            vals = [v for old in vals for v in (old, old | {name})]
        key = lambda v: tuple(p in v for p in names)
        return tuple(sorted(vals, key=key))

    @property
    def input_vals(self) -> tuple[Valuation, ...]:
        return self._cached()[0]

    @property
    def output_vals(self) -> tuple[Valuation, ...]:
        return self._cached()[1]

    @property
    def letters(self) -> tuple[IOLetter, ...]:
        return self._cached()[2]

    @lru_cache(maxsize=None)
    def _cached(self):
        ins = self._valuations(self.inputs)
        outs = self._valuations(self.outputs)
        letters = tuple((i, o) for i in ins for o in outs)
        return ins, outs, letters

    def letter_index(self, i_idx: int, o_idx: int) -> int:
        return i_idx * len(self.output_vals) + o_idx

    def letters_of_input(self, i_idx: int) -> range:
        n_out = len(self.output_vals)
        return range(i_idx * n_out, (i_idx + 1) * n_out)

    def input_index(self, v: Valuation) -> int:
        return self._index_maps()[0][v]

    def output_index(self, v: Valuation) -> int:
        return self._index_maps()[1][v]

    @lru_cache(maxsize=None)
    def _index_maps(self):
        imap = {v: i for i, v in enumerate(self.input_vals)}
        omap = {v: i for i, v in enumerate(self.output_vals)}
        return imap, omap

    def render_val(self, v: Valuation, side: str) -> str:
        """Literal conjunction like "r1 & !r2" for one valuation."""
        names = self.inputs if side == "in" else self.outputs
        if not names:
            return "true"
        return " & ".join(p if p in v else "!" + p for p in names)

    def render_letter(self, letter: IOLetter) -> str:
        return f"{self.render_val(letter[0], 'in')} / {self.render_val(letter[1], 'out')}"


def val_key(v: Valuation, names: tuple[str, ...]) -> tuple:
    """Ordering key of a valuation: presence bits over sorted names."""
    return tuple(p in v for p in names)


def word_key(w: IOWord, alphabet: Alphabet) -> tuple:
    """Length-lexicographic ordering key for IO words."""
    flat = []
    for i, o in w:
        flat.append(val_key(i, alphabet.inputs))
        flat.append(val_key(o, alphabet.outputs))
    return (len(w), tuple(flat))


@dataclass(frozen=True)
class LassoWord:
    """Ultimately periodic word prefix . loop^omega; loop is nonempty."""

    prefix: IOWord
    loop: IOWord

    def __post_init__(self):
        if len(self.loop) == 0:
            raise ValueError("lasso loop must be nonempty")

    def letter(self, pos: int) -> IOLetter:
        if pos < len(self.prefix):
            return self.prefix[pos]
        return self.loop[(pos - len(self.prefix)) % len(self.loop)]

    @property
    def period_start(self) -> int:
        return len(self.prefix)

    @property
    def positions(self) -> int:
        """Number of distinct positions (prefix plus one loop unrolling)."""
        return len(self.prefix) + len(self.loop)

    def succ(self, pos: int) -> int:
        """Successor position, wrapping the last loop position back."""
        return pos + 1 if pos + 1 < self.positions else self.period_start

    def rotate(self) -> "LassoWord":
        """Same omega-word with the loop rotated by one letter."""
        return LassoWord(self.prefix + self.loop[:1], self.loop[1:] + self.loop[:1])


# --- formula AST ---------------------------------------------------------


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class WeakUntil(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    child: Formula


@dataclass(frozen=True)
class Always(Formula):
    child: Formula


def formula_str(f: Formula) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return f"!({formula_str(f.child)})"
    if isinstance(f, Next):
        return f"X ({formula_str(f.child)})"
    if isinstance(f, Eventually):
        return f"F ({formula_str(f.child)})"
    if isinstance(f, Always):
        return f"G ({formula_str(f.child)})"
    if isinstance(f, And):
        return f"({formula_str(f.left)} & {formula_str(f.right)})"
    if isinstance(f, Or):
        return f"({formula_str(f.left)} | {formula_str(f.right)})"
    if isinstance(f, Until):
        return f"({formula_str(f.left)} U {formula_str(f.right)})"
    if isinstance(f, WeakUntil):
        return f"({formula_str(f.left)} W {formula_str(f.right)})"
    if isinstance(f, Release):
        return f"({formula_str(f.left)} R {formula_str(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def atoms_of(f: Formula) -> frozenset:
    if isinstance(f, Atom):
        return frozenset({f.name})
    parts = []
    for name in ("child", "left", "right"):
        sub = getattr(f, name, None)
        if sub is not None:
            parts.append(atoms_of(sub))
    return frozenset().union(*parts) if parts else frozenset()


# --- parser --------------------------------------------------------------

# Precedence, loosest first: <->, ->, |, &, {U,W,R}, prefix {! X G F}.
# U/W/R and -> associate to the right, <-> to the left.

_BINOPS = ("U", "W", "R")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        i = 0
        while i < len(text):
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c.isalnum() or c == "_":
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                word = text[i:j]
                self.toks.append(("word", word, i))
                i = j
            elif text.startswith("<->", i):
                self.toks.append(("iff", "<->", i))
                i += 3
            elif text.startswith("->", i):
                self.toks.append(("impl", "->", i))
                i += 2
            elif c in "!&|()":
                self.toks.append((c, c, i))
                i += 1
            else:
                raise LtlParseError(f"unexpected character {c!r}", i)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        if self.pos < len(self.toks):
            return self.toks[self.pos]
        return ("eof", "", len(self.text))

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        self.pos += 1
        return tok


def parse_formula(text: str, alphabet: Alphabet) -> Formula:
    """Parse the documented grammar; atoms must be declared in `alphabet`."""
    toks = _Tokens(text)

    def parse_iff() -> Formula:
        f = parse_impl()
        while toks.peek()[0] == "iff":
            toks.next()
            g = parse_impl()
            # p <-> q  ==  (p -> q) & (q -> p), expanded at parse time
            f = And(Or(Not(f), g), Or(Not(g), f))
        return f

    def parse_impl() -> Formula:
        f = parse_or()
        if toks.peek()[0] == "impl":
            toks.next()
            g = parse_impl()
            return Or(Not(f), g)
        return f

    def parse_or() -> Formula:
        f = parse_and()
        while toks.peek()[0] == "|":
            toks.next()
            f = Or(f, parse_and())
        return f

    def parse_and() -> Formula:
        f = parse_until()
        while toks.peek()[0] == "&":
            toks.next()
            f = And(f, parse_until())
        return f

    def parse_until() -> Formula:
        f = parse_unary()
        kind, word, _ = toks.peek()
        if kind == "word" and word in _BINOPS:
            toks.next()
            g = parse_until()
            if word == "U":
                return Until(f, g)
            if word == "W":
                return WeakUntil(f, g)
            return Release(f, g)
        return f

    def parse_unary() -> Formula:
        kind, word, pos = toks.peek()
        if kind == "!":
            toks.next()
            return Not(parse_unary())
        if kind == "word" and word in ("X", "G", "F"):
            toks.next()
            child = parse_unary()
            return {"X": Next, "G": Always, "F": Eventually}[word](child)
        return parse_atom()

    def parse_atom() -> Formula:
        kind, word, pos = toks.next()
        if kind == "(":
            f = parse_iff()
            kind2, _, pos2 = toks.next()
            if kind2 != ")":
                raise LtlParseError("expected ')'", pos2)
            return f
        if kind == "word":
            if word == "true":
                return TrueF()
            if word == "false":
                return FalseF()
            if word in RESERVED:
                raise LtlParseError(f"misplaced operator {word!r}", pos)
            if word not in alphabet.props:
                raise LtlParseError(f"undeclared atomic proposition {word!r}", pos)
            return Atom(word)
        raise LtlParseError(f"expected a formula, got {word!r}" if word else "unexpected end of formula", pos)

    f = parse_iff()
    kind, word, pos = toks.peek()
    if kind != "eof":
        raise LtlParseError(f"trailing input {word!r}", pos)
    return f


# --- negation normal form ------------------------------------------------


def to_nnf(f: Formula) -> Formula:
    """Push negations onto atoms; rewrite F/G/W into the {X,U,R,&,|} core."""
    return _nnf(f, False)


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, TrueF):
        return FalseF() if neg else f
    if isinstance(f, FalseF):
        return TrueF() if neg else f
    if isinstance(f, Atom):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.child, not neg)
    if isinstance(f, And):
        cls = Or if neg else And
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Or):
        cls = And if neg else Or
        return cls(_nnf(f.left, neg), _nnf(f.right, neg))
    if isinstance(f, Next):
        return Next(_nnf(f.child, neg))
    if isinstance(f, Until):
        if neg:
            return Release(_nnf(f.left, True), _nnf(f.right, True))
        return Until(_nnf(f.left, False), _nnf(f.right, False))
    if isinstance(f, Release):
        if neg:
            return Until(_nnf(f.left, True), _nnf(f.right, True))
        return Release(_nnf(f.left, False), _nnf(f.right, False))
    if isinstance(f, Eventually):
        return _nnf(Until(TrueF(), f.child), neg)
    if isinstance(f, Always):
        return _nnf(Release(FalseF(), f.child), neg)
    if isinstance(f, WeakUntil):
        # a W b  ==  b R (a | b)
        return _nnf(Release(f.right, Or(f.left, f.right)), neg)
    raise TypeError(f"not a formula: {f!r}")


def is_nnf(f: Formula) -> bool:
    if isinstance(f, (TrueF, FalseF, Atom)):
        return True
    if isinstance(f, Not):
        return isinstance(f.child, Atom)
    if isinstance(f, (And, Or, Until, Release)):
        return is_nnf(f.left) and is_nnf(f.right)
    if isinstance(f, Next):
        return is_nnf(f.child)
    return False


# --- lasso evaluation ----------------------------------------------------


def eval_lasso(f: Formula, w: LassoWord) -> bool:
    """Exact LTL truth value of `f` on the omega-word prefix . loop^omega.

    Truth vectors over the finitely many (position, subformula) pairs are
    computed bottom-up; U/F are least fixpoints and R/G/W greatest ones,
    iterated to stability around the loop.  No approximation.
    """
    n = w.positions
    succ = [w.succ(p) for p in range(n)]

    def vec(g: Formula) -> list[bool]:
        if isinstance(g, TrueF):
            return [True] * n
        if isinstance(g, FalseF):
            return [False] * n
        if isinstance(g, Atom):
            return [g.name in w.letter(p)[0] or g.name in w.letter(p)[1] for p in range(n)]
        if isinstance(g, Not):
            return [not b for b in vec(g.child)]
        if isinstance(g, And):
            lv, rv = vec(g.left), vec(g.right)
            return [a and b for a, b in zip(lv, rv)]
        if isinstance(g, Or):
            lv, rv = vec(g.left), vec(g.right)
            return [a or b for a, b in zip(lv, rv)]
        if isinstance(g, Next):
            cv = vec(g.child)
            return [cv[succ[p]] for p in range(n)]
        if isinstance(g, Until):
            return _fix(vec(g.left), vec(g.right), succ, least=True)
        if isinstance(g, WeakUntil):
            return _fix(vec(g.left), vec(g.right), succ, least=False)
        if isinstance(g, Release):
            # a R b == b holds until (and including when) a joins it
            lv, rv = vec(g.left), vec(g.right)
            v = [True] * n
            changed = True
            while changed:
                changed = False
                for p in range(n):
                    nv = rv[p] and (lv[p] or v[succ[p]])
                    if nv != v[p]:
                        v[p] = nv
                        changed = True
            return v
        if isinstance(g, Eventually):
            cv = vec(g.child)
            return _fix([True] * n, cv, succ, least=True)
        if isinstance(g, Always):
            cv = vec(g.child)
            v = [True] * n
            changed = True
            while changed:
                changed = False
                for p in range(n):
                    nv = cv[p] and v[succ[p]]
                    if nv != v[p]:
                        v[p] = nv
                        changed = True
            return v
        raise TypeError(f"not a formula: {g!r}")

    return vec(f)[0]


def _fix(lv: list[bool], rv: list[bool], succ: list[int], least: bool) -> list[bool]:
    """Solve v[p] = rv[p] | (lv[p] & v[succ[p]]) as a least/greatest fixpoint."""
    n = len(succ)
    v = [not least] * n
    changed = True
    while changed:
        changed = False
        for p in range(n):
            nv = rv[p] or (lv[p] and v[succ[p]])
            if nv != v[p]:
                v[p] = nv
                changed = True
    return v
