"""Prefix trees, merging, quotients, runs, formats."""
import random

import pytest

from mealysynth.ltl import Alphabet
from mealysynth.machines import (
    ExampleSet,
    InconsistentExamplesError,
    NonCongruenceError,
    PreMealy,
    StatePartition,
    accepts,
    canonical_form,
    machines_isomorphic,
    merge_class,
    mergeable,
    parse_machine,
    pta_build,
    quotient,
    reach_sets,
    run,
    serialize_machine,
    to_dot,
)

from fixtures import MUTEX_AB, machine_from_table, mutex_examples, words
from helpers import AB1, AB2, machine_words, random_mealy, random_pre_mealy, random_ucw

# the running two-letter example: i' = {}, i = {a}; o = {}, o' = {x}
E0_WORDS = words(
    [((), ())],
    [(("a",), ()), (("a",), ()), ((), ("x",))],
)


def e0() -> ExampleSet:
    return ExampleSet(E0_WORDS, AB1)


def e0_pta() -> PreMealy:
    return pta_build(e0())


class TestConsistency:
    def test_e0_consistent(self):
        assert e0().is_consistent()

    def test_clash_detected(self):
        E = ExampleSet(words([(("a",), ())], [(("a",), ("x",))]), AB1)
        wit = E.find_inconsistency()
        assert wit is not None
        assert wit.prefix == () and wit.inp == frozenset({"a"})
        assert {wit.out1, wit.out2} == {frozenset(), frozenset({"x"})}

    def test_empty_consistent(self):
        assert ExampleSet([], AB1).is_consistent()


class TestPta:
    def test_e0_shape(self):
        pta = e0_pta()
        assert pta.n == 5
        # states numbered in length-lexicographic order of access words
        a = AB1.input_index(frozenset({"a"}))
        na = AB1.input_index(frozenset())
        o = AB1.output_index(frozenset())
        ox = AB1.output_index(frozenset({"x"}))
        assert pta.trans[0] == {na: (o, 1), a: (o, 2)}
        assert pta.trans[1] == {}
        assert pta.trans[2] == {a: (o, 3)}
        assert pta.trans[3] == {na: (ox, 4)}
        assert pta.trans[4] == {}

    def test_empty_examples(self):
        pta = pta_build(ExampleSet([], AB1))
        assert pta.n == 1 and pta.n_transitions == 0

    def test_mutex_pta_shape(self):
        pta = pta_build(mutex_examples())
        assert pta.n == 6
        # root branches on the all-false and the both-requests inputs
        i00 = MUTEX_AB.input_index(frozenset())
        i11 = MUTEX_AB.input_index(frozenset({"r1", "r2"}))
        assert sorted(pta.trans[0]) == sorted([i00, i11])
        assert pta.trans[0][i00][1] == 1
        assert pta.trans[0][i11][1] == 2

    def test_inconsistent_raises(self):
        E = ExampleSet(words([(("a",), ())], [(("a",), ("x",))]), AB1)
        with pytest.raises(InconsistentExamplesError):
            pta_build(E)

    def test_accepts_all_examples(self):
        pta = e0_pta()
        for w in E0_WORDS:
            assert accepts(pta, w)


class TestRunAccepts:
    def test_run_on_quotient(self):
        part = StatePartition(5, [0, 0, 2, 2, 2])
        m = quotient(e0_pta(), part)
        out = run(m, [frozenset({"a"}), frozenset()])
        # ends in the merged class {2,3,4} having produced o'
        assert out.hole_at is None
        assert out.state == 1 and out.output == frozenset({"x"})

    def test_run_empty_input(self):
        pta = e0_pta()
        out = run(pta, [])
        assert out.state == pta.initial and out.output is None and out.hole_at is None

    def test_run_reports_first_hole(self):
        out = run(e0_pta(), [frozenset(), frozenset({"a"})])
        assert out.hole_at == 1 and out.state == 1 and out.hole_input == frozenset({"a"})

    def test_accepts_epsilon(self):
        assert accepts(e0_pta(), ())

    def test_fig_quotient_accepts_new_words(self):
        part = StatePartition(5, [0, 0, 2, 2, 2])
        m = quotient(e0_pta(), part)
        w = words([((), ()), (("a",), ())])[0]  # i'o io
        assert accepts(m, w)
        assert not accepts(e0_pta(), w)


class TestMerging:
    def test_merge_class_example(self):
        part = merge_class(e0_pta(), StatePartition(5), 0, 2)
        assert part.classes() == [[0, 2, 3], [1, 4]]

    def test_merge_self_is_identity(self):
        part = merge_class(e0_pta(), StatePartition(5), 3, 3)
        assert part.classes() == [[0], [1], [2], [3], [4]]

    def test_mergeable_examples(self):
        pta = e0_pta()
        ident = StatePartition(5)
        assert not mergeable(pta, ident, 0, 2)
        assert mergeable(pta, ident, 2, 3)
        assert mergeable(pta, ident, 3, 4)
        assert mergeable(pta, ident, 1, 4)
        assert mergeable(pta, ident, 2, 2)

    def test_confluence_bfs_vs_dfs(self):
        rng = random.Random(73)
        for _ in range(100):
            m = random_pre_mealy(rng, AB1, rng.randint(2, 7))
            part = StatePartition(m.n)
            x, y = rng.randrange(m.n), rng.randrange(m.n)
            assert merge_class(m, part, x, y, order="bfs") == merge_class(m, part, x, y, order="dfs")

    def test_merge_only_coarsens(self):
        rng = random.Random(79)
        for _ in range(50):
            m = random_pre_mealy(rng, AB1, rng.randint(2, 6))
            part = StatePartition(m.n)
            for _ in range(3):
                x, y = rng.randrange(m.n), rng.randrange(m.n)
                part2 = merge_class(m, part, x, y)
                for c in part.classes():
                    root = part2.find(c[0])
                    assert all(part2.find(s) == root for s in c)
                part = part2


class TestQuotient:
    def test_e0_quotient_language(self):
        part = StatePartition(5, [0, 0, 2, 2, 2])
        m = quotient(e0_pta(), part)
        assert m.n == 2
        assert m.labels == ["0,1", "2,3,4"]
        # language (i' + i) o (i o + i' o')*
        ok = words([((), ()), (("a",), ()), (("a",), ()), ((), ("x",))])[0]
        bad = words([(("a",), ("x",))])[0]
        assert accepts(m, ok)
        assert not accepts(m, bad)

    def test_quotient_by_identity_isomorphic(self):
        pta = e0_pta()
        m = quotient(pta, StatePartition(5))
        assert machines_isomorphic(pta, m)

    def test_non_congruent_partition_rejected(self):
        part = StatePartition(5, [0, 1, 0, 3, 4])  # merges 0,2 only
        with pytest.raises(NonCongruenceError):
            quotient(e0_pta(), part)

    def test_mutex_full_merge(self):
        pta = pta_build(mutex_examples())
        part = StatePartition(6)
        for x, y in [(0, 1), (0, 3), (0, 4), (0, 5)]:
            assert mergeable(pta, part, x, y)
            part = merge_class(pta, part, x, y)
        assert part.classes() == [[0, 1, 3, 4, 5], [2]]
        m = quotient(pta, part)
        assert m.n == 2
        from fixtures import mutex_expected_generalization

        assert machines_isomorphic(m, mutex_expected_generalization())

    def test_quotient_soundness_random(self):
        rng = random.Random(83)
        for _ in range(50):
            target = random_mealy(rng, AB1, rng.randint(1, 4))
            E = ExampleSet(machine_words(rng, target, rng.randint(1, 5), 6), AB1)
            pta = pta_build(E)
            part = StatePartition(pta.n)
            for _ in range(4):
                x, y = rng.randrange(pta.n), rng.randrange(pta.n)
                if mergeable(pta, part, x, y):
                    part = merge_class(pta, part, x, y)
            m = quotient(pta, part)
            for w in E:
                assert accepts(m, w)


class TestReachSets:
    def test_initial_contains_automaton_initials(self):
        rng = random.Random(89)
        for _ in range(20):
            m = random_pre_mealy(rng, AB1, rng.randint(1, 4))
            a = random_ucw(rng, AB1, rng.randint(1, 4))
            sets = reach_sets(m, a)
            assert a.initial <= sets[m.initial]

    def test_tree_leaf_reach(self):
        pta = e0_pta()
        rng = random.Random(97)
        a = random_ucw(rng, AB1, 3)
        sets = reach_sets(pta, a)
        # leaf 4 is reached by the unique word i o i o i' o'
        word = E0_WORDS[1]
        cur = set(a.initial)
        for i_val, o_val in word:
            idx = AB1.letter_index(AB1.input_index(i_val), AB1.output_index(o_val))
            cur = {w for q in cur for w in a.trans[q][idx]}
        assert sets[4] == frozenset(cur)

    def test_monotone_under_adding_transitions(self):
        rng = random.Random(101)
        for _ in range(30):
            m = random_pre_mealy(rng, AB1, rng.randint(2, 4), p_hole=0.6)
            a = random_ucw(rng, AB1, rng.randint(1, 3))
            holes = m.holes()
            if not holes:
                continue
            q, i = holes[0]
            m2 = m.extended(q, i, 0, rng.randrange(m.n))
            s1, s2 = reach_sets(m, a), reach_sets(m2, a)
            for x in range(m.n):
                assert s1[x] <= s2[x]


class TestDotAndFormat:
    def test_empty_machine_dot(self):
        m = PreMealy(AB1, 1, 0, [{}])
        dot = to_dot(m)
        assert dot.count("shape=circle") == 1
        assert "->" in dot  # the init arrow

    def test_quotient_dot_edges(self):
        part = StatePartition(5, [0, 0, 2, 2, 2])
        m = quotient(e0_pta(), part)
        dot = to_dot(m)
        assert dot.count("label=") == 2 + 4  # 2 nodes + 4 transitions

    def test_dot_deterministic(self):
        m = quotient(e0_pta(), StatePartition(5, [0, 0, 2, 2, 2]))
        assert to_dot(m) == to_dot(m)

    def test_machine_text_round_trip(self):
        rng = random.Random(103)
        for _ in range(20):
            m = random_pre_mealy(rng, AB2, rng.randint(1, 5))
            m2 = parse_machine(serialize_machine(m))
            assert machines_isomorphic(m, m2) or canonical_form(m) == canonical_form(m2)


class TestPrefixClosure:
    def test_accepting_word_accepts_prefixes(self):
        rng = random.Random(107)
        for _ in range(50):
            m = random_mealy(rng, AB1, rng.randint(1, 4))
            for w in machine_words(rng, m, 3, 6):
                assert accepts(m, w)
                for j in range(len(w)):
                    assert accepts(m, w[:j])
