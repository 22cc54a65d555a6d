"""Shared random-instance generators for the property tests.

All generators take an explicit `random.Random` so every test run is
reproducible; seeds are fixed in the tests themselves.
"""
from __future__ import annotations

import random

from mealysynth.ltl import (
    Alphabet,
    And,
    Atom,
    Eventually,
    Always,
    FalseF,
    LassoWord,
    Next,
    Not,
    Or,
    Release,
    TrueF,
    Until,
    WeakUntil,
    to_nnf,
)
from mealysynth.automata import UCW
from mealysynth.machines import PreMealy

AB1 = Alphabet(("a",), ("x",))
AB2 = Alphabet(("r1", "r2"), ("g1", "g2"))


def random_val(rng: random.Random, names) -> frozenset:
    return frozenset(p for p in names if rng.random() < 0.5)


def random_letter(rng: random.Random, ab: Alphabet):
    return (random_val(rng, ab.inputs), random_val(rng, ab.outputs))


def random_word(rng: random.Random, ab: Alphabet, length: int):
    return tuple(random_letter(rng, ab) for _ in range(length))


def random_lasso(rng: random.Random, ab: Alphabet, max_prefix=3, max_loop=4) -> LassoWord:
    pre = random_word(rng, ab, rng.randint(0, max_prefix))
    loop = random_word(rng, ab, rng.randint(1, max_loop))
    return LassoWord(pre, loop)


def random_formula(rng: random.Random, ab: Alphabet, size: int, nnf=False):
    """Random formula with roughly `size` operator/leaf nodes."""
    props = list(ab.inputs) + list(ab.outputs)
    if size <= 1:
        r = rng.random()
        if r < 0.1:
            return TrueF()
        if r < 0.15:
            return FalseF()
        return Atom(rng.choice(props))
    unary = [Next, Eventually, Always, Not]
    binary = [And, Or, Until, Release, WeakUntil]
    if rng.random() < 0.45:
        op = rng.choice(unary)
        f = op(random_formula(rng, ab, size - 1))
    else:
        op = rng.choice(binary)
        ls = rng.randint(1, size - 1)
        f = op(random_formula(rng, ab, ls), random_formula(rng, ab, size - ls))
    return to_nnf(f) if nnf else f


def random_ucw(rng: random.Random, ab: Alphabet, n_states: int, p_counted=0.4) -> UCW:
    """Random complete UCW: every (state, letter) has at least one successor."""
    n_letters = len(ab.letters)
    trans = []
    for q in range(n_states):
        row = []
        for _ in range(n_letters):
            succs = sorted({rng.randrange(n_states) for _ in range(rng.randint(1, 2))})
            row.append(tuple(succs))
        trans.append(row)
    counted = frozenset(q for q in range(n_states) if rng.random() < p_counted)
    initial = frozenset({0})
    return UCW(ab, n_states, initial, trans, counted)


def random_mealy(rng: random.Random, ab: Alphabet, n_states: int) -> PreMealy:
    """Random complete machine (all states, all inputs defined)."""
    n_in = len(ab.input_vals)
    n_out = len(ab.output_vals)
    trans = []
    for q in range(n_states):
        row = {}
        for i in range(n_in):
            row[i] = (rng.randrange(n_out), rng.randrange(n_states))
        trans.append(row)
    return PreMealy(ab, n_states, 0, trans).to_mealy()


def random_pre_mealy(rng: random.Random, ab: Alphabet, n_states: int, p_hole=0.4) -> PreMealy:
    """Random connected partial machine (state q>0 entered from some q'<q)."""
    n_in = len(ab.input_vals)
    n_out = len(ab.output_vals)
    trans: list[dict] = [{} for _ in range(n_states)]
    for q in range(1, n_states):
        src = rng.randrange(q)
        free = [i for i in range(n_in) if i not in trans[src]]
        if not free:
            src = next((s for s in range(q) if len(trans[s]) < n_in), 0)
            free = [i for i in range(n_in) if i not in trans[src]] or [rng.randrange(n_in)]
        trans[src][rng.choice(free)] = (rng.randrange(n_out), q)
    for q in range(n_states):
        for i in range(n_in):
            if i not in trans[q] and rng.random() > p_hole:
                trans[q][i] = (rng.randrange(n_out), rng.randrange(n_states))
    return PreMealy(ab, n_states, 0, trans)


def machine_words(rng: random.Random, m: PreMealy, count: int, max_len: int):
    """Random members of L(m) (possibly shorter than max_len at a hole)."""
    out = []
    for _ in range(count):
        word = []
        q = m.initial
        for _ in range(rng.randint(1, max_len)):
            choices = sorted(m.trans[q])
            if not choices:
                break
            i = rng.choice(choices)
            o, q2 = m.trans[q][i]
            word.append((m.alphabet.input_vals[i], m.alphabet.output_vals[o]))
            q = q2
        if word:
            out.append(tuple(word))
    return out
