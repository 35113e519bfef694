import random

import pytest
from hypothesis import given, strategies as st

from oracles import lcs_bruteforce, lcs_full_matrix
from rot_harness.errors import EmptyAggregate
from rot_harness.metrics import (
    Score,
    ScoreKind,
    aggregate,
    canonical_equal,
    exact_match,
    lcs_length,
    normalize_answer,
    rouge_l,
    tokenize,
)


@pytest.mark.parametrize(
    "a,b",
    [("1,500", "1500"), ("  Paris ", "paris"), ("20%", "20"), ("$300", "300"), ("“Oslo”", "oslo")],
)
def test_normalize_equal(a, b):
    assert canonical_equal(normalize_answer(a), normalize_answer(b))


def test_normalize_forms():
    assert normalize_answer("1,500") == 1500.0
    assert normalize_answer("New   York") == "new york"
    assert normalize_answer("ｆｕｌｌ") == "full"  # NFKC


def test_exact_match_examples():
    assert exact_match(None, ["x"]).value == 0.0
    assert exact_match("b|a", ["a", "b"]).value == 1.0
    assert exact_match("3.0000001", ["3"]).value == 1.0
    assert exact_match("3.001", ["3"]).value == 0.0


def test_rouge_examples():
    assert rouge_l("the cat sat", ["the cat"]).value == pytest.approx(0.8, abs=1e-12)
    assert rouge_l("abc", ["abc"]).value == 1.0
    assert rouge_l("x y", ["p q"]).value == 0.0


def test_rouge_empty_cases():
    assert rouge_l("", [""]).value == 1.0
    assert rouge_l("", ["a"]).value == 0.0
    assert rouge_l("a", ["..."]).value == 0.0


def test_rouge_tokenizer():
    assert tokenize("Hello, World-2024!") == ["hello", "world", "2024"]


def test_lcs_examples():
    assert lcs_length(list("abc"), list("ac")) == 2
    assert lcs_length([], list("xyz")) == 0


def test_lcs_random_against_oracles():
    rng = random.Random(11)
    for _ in range(50):
        a = [rng.choice("abcd") for _ in range(50)]
        b = [rng.choice("abcd") for _ in range(50)]
        assert lcs_length(a[:12], b[:12]) == lcs_bruteforce(a[:12], b[:12])
        assert lcs_length(a, b) == lcs_full_matrix(a, b)


tokens = st.lists(st.sampled_from("abcde"), max_size=15)


@given(tokens, tokens)
def test_lcs_properties(a, b):
    n = lcs_length(a, b)
    assert n == lcs_length(b, a)
    assert n <= min(len(a), len(b))
    assert lcs_length(a, a) == len(a)


words = st.lists(st.sampled_from(["the", "cat", "sat", "on", "mat", "1"]), min_size=1, max_size=8).map(" ".join)


@given(words, st.lists(words, min_size=1, max_size=3), words)
def test_rouge_properties(pred, refs, extra):
    s = rouge_l(pred, refs).value
    assert 0.0 <= s <= 1.0
    assert rouge_l(pred, [pred]).value == pytest.approx(1.0)
    assert rouge_l(pred, refs + [extra]).value >= s


@given(st.permutations(["a", "1,000", "Paris"]))
def test_exact_match_gold_permutation(golds):
    assert exact_match("paris|1000|A", golds).value == 1.0


@given(st.sampled_from(["Paris", "1,000", "Big Apple"]), st.sampled_from([str.upper, str.lower, lambda s: f"  {s} "]))
def test_exact_match_normalization_invariance(ans, f):
    assert exact_match(f(ans), [ans]).value == 1.0
    assert exact_match(ans, [f(ans)]).value == 1.0


def test_score_invariants():
    with pytest.raises(ValueError):
        Score(ScoreKind.EXACT_MATCH, 0.5)
    with pytest.raises(ValueError):
        Score(ScoreKind.ROUGE_L, 1.5)


class _Rec:
    def __init__(self, v, qtype=None):
        self.scores = (Score(ScoreKind.EXACT_MATCH, v),)
        self.qtype = qtype
        self.instance_id = "x"


def test_aggregate():
    s = aggregate([_Rec(1.0), _Rec(0.0), _Rec(1.0, "a"), _Rec(1.0, "a")], ScoreKind.EXACT_MATCH)
    assert s.mean == 0.75 and s.count == 4
    assert s.by_qtype == {"-": (0.5, 2), "a": (1.0, 2)}
    assert aggregate([_Rec(1.0)], "em").mean == 1.0
    with pytest.raises(EmptyAggregate):
        aggregate([], ScoreKind.EXACT_MATCH)
