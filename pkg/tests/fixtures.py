"""Hand-built machines, formulas and traces for the benchmark scenarios."""
from __future__ import annotations

from mealysynth.ltl import Alphabet, parse_formula
from mealysynth.machines import ExampleSet, PreMealy

MUTEX_AB = Alphabet(("r1", "r2"), ("g1", "g2"))

PHI_CORE = "G(!g1 | !g2) & G(r1 -> F g1) & G(r2 -> F g2)"


def mutex_core():
    return parse_formula(PHI_CORE, MUTEX_AB)


def machine_from_table(ab: Alphabet, table, initial=0) -> PreMealy:
    """Build a machine from {state: {input-names: (output-names, dst)}}."""
    n = len(table)
    trans = []
    for q in range(n):
        row = {}
        for inp, (out, dst) in table[q].items():
            i = ab.input_index(frozenset(inp))
            row[i] = (ab.output_index(frozenset(out)), dst)
        trans.append(row)
    return PreMealy(ab, n, initial, trans)


def words(*seqs):
    """Convert [(inp-names, out-names), ...] sequences into IO words."""
    return [tuple((frozenset(i), frozenset(o)) for i, o in seq) for seq in seqs]


# the two example traces of the mutual-exclusion scenario
MUTEX_TRACES = words(
    [((), ()), (("r1",), ("g1",)), (("r2",), ("g2",))],
    [(("r1", "r2"), ("g1",)), ((), ("g2",))],
)


def mutex_examples() -> ExampleSet:
    return ExampleSet(MUTEX_TRACES, MUTEX_AB)


def round_robin() -> PreMealy:
    """Two states alternating the grants regardless of requests."""
    every = lambda out, dst: {inp: (out, dst) for inp in [(), ("r1",), ("r2",), ("r1", "r2")]}
    return machine_from_table(MUTEX_AB, {0: every(("g1",), 1), 1: every(("g2",), 0)})


def always_g1() -> PreMealy:
    every = {inp: (("g1",), 0) for inp in [(), ("r1",), ("r2",), ("r1", "r2")]}
    return machine_from_table(MUTEX_AB, {0: every})


def mutex_expected_solution() -> PreMealy:
    """The natural 3-state arbiter: grant pending requests, remember debts.

    State 1 owes g2 (both requested, g1 was granted); state 2 owes g1.
    """
    return machine_from_table(
        MUTEX_AB,
        {
            0: {
                (): ((), 0),
                ("r1",): (("g1",), 0),
                ("r2",): (("g2",), 0),
                ("r1", "r2"): (("g1",), 1),
            },
            1: {
                (): (("g2",), 0),
                ("r2",): (("g2",), 0),
                ("r1",): (("g2",), 2),
                ("r1", "r2"): (("g2",), 2),
            },
            2: {
                (): (("g1",), 0),
                ("r1",): (("g1",), 0),
                ("r2",): (("g1",), 1),
                ("r1", "r2"): (("g1",), 1),
            },
        },
    )


def mutex_expected_generalization() -> PreMealy:
    """The two-state machine the merging phase reaches on the mutex traces."""
    return machine_from_table(
        MUTEX_AB,
        {
            0: {
                (): ((), 0),
                ("r1",): (("g1",), 0),
                ("r2",): (("g2",), 0),
                ("r1", "r2"): (("g1",), 1),
            },
            1: {
                (): (("g2",), 0),
            },
        },
    )


# electric bike scenario ----------------------------------------------------

EBIKE_AB = Alphabet(("brk", "ful", "spd"), ("as", "re", "ri"))

EBIKE_SPEC = [
    "G(ful -> !re)",
    "G(!brk -> (!ri & !re))",
    "G(spd -> !as)",
    "G((brk & X brk & X X brk) -> X X ((re | ri) W !brk))",
    "G((!brk & X !brk & X X !brk) -> (X X ((!spd -> as) W brk)))",
    "G(re -> X !as) & G(as -> X !re)",
    "G((re | ri) -> !as)",
]


def ebike_expected_solution() -> PreMealy:
    """Three-state controller: q0 neutral, q1 assisting, q2 braking."""
    idle = ()
    t = {
        # q0: brake -> regenerate (or rim-brake on a full battery); otherwise
        # assist unless over the speed limit
        0: {
            ("brk",): (("re",), 2),
            ("brk", "spd"): (("re",), 2),
            ("brk", "ful"): (("ri",), 0),
            ("brk", "ful", "spd"): (("ri",), 0),
            ("spd",): (idle, 0),
            ("ful", "spd"): (idle, 0),
            (): (("as",), 1),
            ("ful",): (("as",), 1),
        },
        # q1: assisting; one idle step separates assistance from recharging
        1: {
            (): (("as",), 1),
            ("ful",): (("as",), 1),
            ("spd",): (idle, 0),
            ("ful", "spd"): (idle, 0),
            ("brk",): (idle, 2),
            ("brk", "ful"): (idle, 2),
            ("brk", "spd"): (idle, 2),
            ("brk", "ful", "spd"): (idle, 2),
        },
        # q2: braking
        2: {
            ("brk",): (("re",), 2),
            ("brk", "spd"): (("re",), 2),
            ("brk", "ful"): (("ri",), 2),
            ("brk", "ful", "spd"): (("ri",), 2),
            (): (idle, 0),
            ("ful",): (idle, 0),
            ("spd",): (idle, 0),
            ("ful", "spd"): (idle, 0),
        },
    }
    return machine_from_table(EBIKE_AB, t)
