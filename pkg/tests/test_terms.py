import pytest

from prsmc.terms import (
    EPS,
    TermSyntaxError,
    compose,
    is_parallel,
    is_sequential,
    last,
    parse_term,
    seq_set,
    subterms,
    substitute,
    var,
)


def T(text):
    return parse_term(text)


class TestCanonicalForm:
    def test_eps_is_parallel_identity(self):
        assert T("X || eps") == T("X")

    def test_empty_sequential_tail(self):
        assert T("X.(eps)") == T("X")

    def test_parallel_commutes(self):
        assert T("Y || X") == T("X || Y")

    def test_multiplicity_kept(self):
        assert T("X || X") != T("X")
        assert len(T("X||X||Y")) == 3

    def test_printing(self):
        assert str(T("Z || X.(Y || W)")) == "X.(W||Y)||Z"
        assert str(EPS) == "eps"

    def test_round_trip(self):
        for text in ["X", "X.(Y.(Z))||W", "X||X.(eps)||Y.(Z||Z)"]:
            assert T(str(T(text))) == T(text)

    def test_syntax_error_has_column(self):
        with pytest.raises(TermSyntaxError) as err:
            parse_term("X.(Y", ["X", "Y"])
        assert "column" in str(err.value)

    def test_unknown_variable(self):
        with pytest.raises(TermSyntaxError):
            parse_term("X||Q", ["X"])


class TestShapes:
    def test_parallel_and_sequential(self):
        assert is_parallel(T("X||Y")) and not is_parallel(T("X.(Y)"))
        assert is_sequential(T("X.(Y.(Z))")) and not is_sequential(T("X||Y"))


class TestSubterms:
    def test_eps(self):
        assert subterms(EPS) == {EPS}

    def test_sequential(self):
        assert subterms(T("X.(Y)")) == {T("X.(Y)"), T("Y")}

    def test_parallel_splits(self):
        assert subterms(T("X||Y")) == {T("X"), T("Y"), T("X||Y")}


class TestSubstitute:
    def test_whole_term(self):
        assert substitute(T("X"), T("X"), T("Y.(Z)")) == {T("Y.(Z)")}

    def test_one_occurrence_deduplicated(self):
        assert substitute(T("X||X"), T("X"), T("Y")) == {T("Y||X")}

    def test_into_eps_canonicalizes(self):
        assert substitute(T("W.(X)"), T("X"), EPS) == {T("W")}


class TestSeqAndLast:
    def test_seq_set(self):
        assert seq_set(EPS) == frozenset()
        assert seq_set(T("X.(Y||Z)")) == {T("X.(Y)"), T("X.(Z)")}
        assert seq_set(T("X||Y")) == {T("X"), T("Y")}

    def test_last(self):
        assert last(T("X")) == "X"
        assert last(T("X.(Y.(Z))")) == "Z"


class TestCompose:
    # the innermost variable is replaced by the second term
    def test_replaces_innermost(self):
        assert compose(T("X"), T("Y")) == T("Y")
        assert compose(T("X.(Y)"), T("Z")) == T("X.(Z)")
        assert compose(T("X.(Y)"), T("Z.(W)")) == T("X.(Z.(W))")

    def test_agrees_with_substitution(self):
        s, s2 = T("X.(Y.(Z))"), T("U.(V)")
        assert {compose(s, s2)} == substitute(s, var(last(s)), s2)

    def test_rejects_parallel(self):
        with pytest.raises(ValueError):
            compose(T("X||Y"), T("Z"))
