import math

import pytest

from prsmc import fixture, parse_system
from prsmc.sysfile import SystemSyntaxError, dump_system
from prsmc.system import (
    Derivation,
    Lasso,
    application_levels,
    check_derivation,
    classify,
    inf_maximal,
    interleavings,
    lasso_maximal,
    maximal,
    replay,
    subderivation,
    successors,
)
from prsmc.terms import EPS, parse_term


def T(text):
    return parse_term(text)


class TestClassify:
    def test_s1_only_sequential_shapes(self, s1):
        # every S1 rule is a push, rename or erase
        assert classify(s1) == "sequential"

    def test_s1prime_sequential(self, s1p):
        assert classify(s1p) == "sequential"

    def test_s2_parallel(self, s2):
        assert classify(s2) == "parallel"

    def test_general(self):
        m = parse_system("vars X Y Z W\nrule r : X||Y -a-> Z.(W)")
        assert classify(m) == "general"

    def test_normal_form(self):
        m = parse_system("vars X Y\nrule p : X -a-> X||Y\nrule q : X -b-> Y.(X)")
        assert classify(m) == "normal_form"


class TestSteps:
    def test_innermost_only(self, s1):
        assert successors(s1, T("W.(Z)")) == {("r3", T("W"))}

    def test_eps_has_none(self, s1):
        assert successors(s1, EPS) == frozenset()

    def test_s2(self, s2):
        assert successors(s2, T("X||Y")) == {("r1", T("X||Y||Y")), ("r2", T("X"))}

    def test_levels(self, s1):
        assert application_levels(s1, T("X"), "r1", T("Y")) == {0}
        assert application_levels(s1, T("W.(Z)"), "r3", T("W")) == {1}

    def test_level_under_head(self):
        m = parse_system("vars X Y\nrule r : X -a-> Y")
        assert application_levels(m, T("X||X.(X)"), "r", T("X||X.(Y)")) == {1}

    def test_not_a_step(self, s1):
        with pytest.raises(ValueError):
            application_levels(s1, T("X"), "r3", T("Y"))


S1_LOOP = ["r1", "r2", "r3", "r5"]


class TestDerivations:
    def test_replay_and_check(self, s1):
        (d,) = replay(s1, T("X"), S1_LOOP)
        check_derivation(s1, d)
        assert [str(t) for t in d.terms] == ["X", "Y", "W.(Z)", "W", "X"]

    def test_bad_step_rejected(self, s1):
        with pytest.raises(ValueError):
            check_derivation(s1, Derivation(T("X"), (("r2", T("W.(Z)")),)))

    def test_subderivation(self, s1):
        (d,) = replay(s1, T("X"), S1_LOOP)
        sub = subderivation(s1, d, 2, T("W.(Z)"))
        assert sub.start == T("Z")
        assert sub.steps == (("r3", EPS),)

    def test_subderivation_of_empty_tail(self, s1):
        (d,) = replay(s1, T("X"), S1_LOOP)
        assert len(subderivation(s1, d, 3, T("W"))) == 0

    def test_subderivation_of_null(self, s1):
        assert len(subderivation(s1, Derivation(T("W.(Z)")), 0, T("W.(Z)"))) == 0


class TestMaximal:
    def test_empty(self, s1):
        assert maximal(s1, []) == frozenset()

    def test_prefix(self, s1):
        assert maximal(s1, ["r1", "r2"]) == {1}

    def test_finite_has_no_infinite_part(self, s1):
        assert inf_maximal(s1, Lasso(("r1", "r2"), ())) == frozenset()

    def test_lasso(self, s1):
        assert inf_maximal(s1, Lasso(("r1",), ("r2", "r3", "r5", "r1"))) == {1, 2}
        assert inf_maximal(s1, Lasso(("r2",), ("r1",))) == frozenset()
        assert lasso_maximal(s1, Lasso(("r2",), ("r1",))) == {1}


class TestInterleavings:
    def test_with_empty(self):
        assert list(interleavings([], ["a", "b"])) == [("a", "b")]

    def test_singletons(self):
        assert set(interleavings(["a"], ["b"])) == {("a", "b"), ("b", "a")}

    def test_count(self):
        for n1 in range(4):
            for n2 in range(4):
                s1 = [f"a{i}" for i in range(n1)]
                s2 = [f"b{i}" for i in range(n2)]
                assert len(list(interleavings(s1, s2))) == math.comb(n1 + n2, n1)


class TestFiles:
    def test_fixture_contents(self, s1):
        assert s1.n == 2
        assert s1.components == (frozenset({"r2"}), frozenset({"r3"}))
        assert s1.vars == {"X", "Y", "W", "Z"}

    def test_round_trip(self):
        for name in ("S1", "S1prime", "S2"):
            m = fixture(name)
            again = parse_system(dump_system(m))
            assert again.rules == m.rules and again.components == m.components

    def test_constructed_labels_parse(self):
        m = parse_system("vars X Y\nrule k : X -{1,2}-> Y\nrule w : X -{1}/{}-> Y\naccepting 2 : k")
        assert str(m.rule("k").label) == "{1,2}" and str(m.rule("w").label) == "{1}/{}"

    def test_error_location(self):
        with pytest.raises(SystemSyntaxError) as err:
            parse_system("vars X\nrule r1 : X -a-> Q")
        assert err.value.line == 2
        assert err.value.located("f.prs").startswith("f.prs:2:")
