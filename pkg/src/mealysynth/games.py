"""Antichain safety game over counting functions.

Solves, for a UCW and bound k, the game in which the environment picks an
input valuation and the system answers with an output valuation, moving a
counting function forward; the system loses as soon as the function goes
unsafe (some state passes k visits).  The winning region is downward
closed and is represented by the antichain of its maximal elements.

The backward fixpoint is the hot path of the whole package, so the
per-letter maximal-predecessor images and the antichain reductions run on
numpy arrays; the public interface deals in plain counting-function tuples.
"""
from __future__ import annotations

import numpy as np

from .automata import UCW
from .counting import CfAntichain, CountingFunction, cf_initial, cf_is_unsafe, cf_step
from .ltl import Alphabet, Valuation

_DTYPE = np.int16
_BIG = _DTYPE(30000)


def _letter_pre_tables(a: UCW):
    """Per letter: padded successor matrix for vectorized min-gather."""
    tables = []
    for letter in range(len(a.alphabet.letters)):
        width = max(len(a.trans[q][letter]) for q in range(a.n))
        mat = np.full((a.n, width), a.n, dtype=np.int64)  # pad with the virtual +inf slot
        for q in range(a.n):
            row = a.trans[q][letter]
            mat[q, : len(row)] = row
        tables.append(mat)
    return tables


def _reduce_antichain(mat: np.ndarray) -> np.ndarray:
    """Rows that are maximal under the pointwise order (unique, sorted).

    Rows are processed in decreasing coordinate-sum order: a strict
    dominator always has a strictly larger sum, so each row only needs to
    be checked against the rows already kept.
    """
    if len(mat) == 0:
        return mat
    mat = np.unique(mat, axis=0)
    if len(mat) == 1:
        return mat
    order = np.argsort(-mat.sum(axis=1), kind="stable")
    mat = mat[order]
    kept = np.empty((0, mat.shape[1]), dtype=mat.dtype)
    chunk = 4096
    for start in range(0, len(mat), chunk):
        block = mat[start : start + chunk]
        if len(kept):
            dominated = (kept[None, :, :] >= block[:, None, :]).all(axis=2).any(axis=1)
            block = block[~dominated]
        # within a block, earlier rows (larger sums) may dominate later ones
        for row in block:
            if len(kept) and bool((kept >= row).all(axis=1).any()):
                continue
            kept = np.concatenate([kept, row[None, :]], axis=0)
    return np.unique(kept, axis=0)


class SafetyContext:
    """A solved safety game: automaton, bound, and the winning antichain."""

    def __init__(self, ucw: UCW, k: int, winning: CfAntichain):
        self.ucw = ucw
        self.k = k
        self.winning = winning
        self.alphabet = ucw.alphabet
        self._win_mat = (
            np.array(winning.elements, dtype=_DTYPE)
            if winning.elements
            else np.empty((0, ucw.n), dtype=_DTYPE)
        )

    @classmethod
    def solve(cls, ucw: UCW, k: int) -> "SafetyContext":
        return cls(ucw, k, winning_antichain(ucw, k))

    def member_below(self, f: CountingFunction) -> bool:
        """Is f in the downward closure of the winning antichain?"""
        if len(self._win_mat) == 0:
            return False
        return bool((self._win_mat >= np.asarray(f, dtype=_DTYPE)).all(axis=1).any())

    def is_realizable(self) -> bool:
        return self.member_below(cf_initial(self.ucw, self.k))

    def dump(self) -> str:
        from .counting import cf_dump

        lines = [f"# winning antichain, {len(self.winning)} elements, k={self.k}"]
        lines += [cf_dump(f, self.k) for f in self.winning]
        return "\n".join(lines) + "\n"


def _pre_batch(front: np.ndarray, tables, counted_cost: np.ndarray, k: int, letter: int) -> np.ndarray:
    """Vectorized cf_pre_max of every row of `front` for one letter."""
    shifted = front - counted_cost[None, :]
    padded = np.concatenate([shifted, np.full((len(front), 1), _BIG, dtype=_DTYPE)], axis=1)
    g = padded[:, tables[letter]].min(axis=2)
    g = np.minimum(g, _DTYPE(k))
    g[g < 0] = -1
    return g


def cpre_antichain(a: UCW, k: int, ac: CfAntichain, _tables=None) -> CfAntichain:
    """Antichain of maximal g from which, for every input, some output moves
    g below the given antichain.

    Computed per input as the antichain of maximal one-letter predecessors,
    then combined across inputs by distributed meets, pruning dominated
    partial meets after every input (fixed input order, so runs are
    deterministic; meets commute, so the order does not affect the result).
    """
    ab = a.alphabet
    if not ac.elements:
        return CfAntichain()
    front = np.array(ac.elements, dtype=_DTYPE)
    tables = _tables if _tables is not None else _letter_pre_tables(a)
    counted_cost = np.array([1 if q in a.counted else 0 for q in range(a.n)], dtype=_DTYPE)

    acc: np.ndarray | None = None
    for i_idx in range(len(ab.input_vals)):
        parts = [
            _pre_batch(front, tables, counted_cost, k, letter)
            for letter in ab.letters_of_input(i_idx)
        ]
        big = _reduce_antichain(np.concatenate(parts, axis=0))
        if acc is None:
            acc = big
        else:
            meets = np.minimum(acc[:, None, :], big[None, :, :]).reshape(-1, a.n)
            acc = _reduce_antichain(meets)
        if len(acc) == 0:
            break
    assert acc is not None
    return CfAntichain(map(tuple, acc.tolist()))


def winning_antichain(a: UCW, k: int) -> CfAntichain:
    """Greatest fixpoint from the all-k function: intersect with the
    controllable predecessors until stable."""
    assert 0 <= k < 30000, "visit bound too large for the packed game representation"
    ac = CfAntichain([(k,) * a.n])
    tables = _letter_pre_tables(a)
    while True:
        pre = cpre_antichain(a, k, ac, _tables=tables)
        if not pre.elements:
            nxt = CfAntichain()
        else:
            cur = np.array(ac.elements, dtype=_DTYPE)
            new = np.array(pre.elements, dtype=_DTYPE)
            meets = np.minimum(cur[:, None, :], new[None, :, :]).reshape(-1, a.n)
            nxt = CfAntichain(map(tuple, _reduce_antichain(meets).tolist()))
        if nxt == ac:
            return ac
        ac = nxt


def allowed_moves(ctx: SafetyContext, f: CountingFunction, i_val: Valuation):
    """All (output valuation, successor function) keeping the game winning.

    Defined for winning f only; the fixpoint property guarantees the result
    is nonempty there.
    """
    ab = ctx.alphabet
    i_idx = ab.input_index(frozenset(i_val))
    moves = []
    for o_idx, o_val in enumerate(ab.output_vals):
        f2 = cf_step(ctx.ucw, ctx.k, f, ab.letter_index(i_idx, o_idx))
        if ctx.member_below(f2):
            moves.append((o_val, f2))
    assert moves, "winning function has no winning move; the fixpoint is broken"
    return moves
