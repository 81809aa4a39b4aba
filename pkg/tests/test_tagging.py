import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srltk import SrlError
from srltk.tagging import (
    ArgumentSpan,
    EmissionMatrix,
    LabelSet,
    brute_force_decode,
    read_emissions,
    sequence_score,
    spans_to_tags,
    tags_to_spans,
    validate,
    viterbi_decode,
    write_emissions,
)


def random_logprobs(rng, n_tokens, n_tags):
    m = np.array([[rng.random() for _ in range(n_tags)] for _ in range(n_tokens)])
    m = m / m.sum(axis=1, keepdims=True)
    return np.log(m)


class TestLabelSet:
    def test_order(self):
        ls = LabelSet(["A0", "AM-TMP"])
        assert ls.tags == ["O", "B-A0", "I-A0", "B-AM-TMP", "I-AM-TMP"]
        assert ls.index("O") == 0

    def test_duplicate_roles_collapse(self):
        assert LabelSet(["A0", "A0"]).tags == ["O", "B-A0", "I-A0"]

    def test_from_tags_roundtrip(self):
        ls = LabelSet(["A0", "C-A1", "R-A0"])
        assert LabelSet.from_tags(ls.tags) == ls

    def test_from_tags_rejects_reordered(self):
        with pytest.raises(SrlError):
            LabelSet.from_tags(["O", "I-A0", "B-A0"])


class TestValidate:
    def test_valid(self):
        assert validate(["O", "B-A0", "I-A0"])

    def test_initial_inside(self):
        assert not validate(["I-A0", "O"])

    def test_role_mismatch(self):
        assert not validate(["B-A0", "I-A1"])

    def test_inside_after_outside(self):
        assert not validate(["B-A0", "O", "I-A0"])


class TestSpanTagConversion:
    def test_empty(self):
        assert spans_to_tags([], 3) == ["O", "O", "O"]
        assert tags_to_spans(["O", "O", "O"]) == []

    def test_reference_sentence(self):
        # "Só precisa ganhar experiência", predicate "ganhar"
        spans = [ArgumentSpan(2, 2, "V"), ArgumentSpan(3, 3, "A1")]
        assert spans_to_tags(spans, 4) == ["O", "O", "B-V", "B-A1"]

    def test_adjacent_same_label(self):
        spans = tags_to_spans(["B-A0", "I-A0", "O", "B-A0"])
        assert [s.key() for s in spans] == [(0, 1, "A0"), (3, 3, "A0")]

    def test_orphan_inside_opens_span(self):
        spans = tags_to_spans(["O", "I-A0", "I-A0", "I-A1"])
        assert [s.key() for s in spans] == [(1, 2, "A0"), (3, 3, "A1")]

    def test_overlap_rejected(self):
        with pytest.raises(SrlError, match="overlaps"):
            spans_to_tags([ArgumentSpan(0, 2, "A0"), ArgumentSpan(2, 3, "A1")], 5)

    def test_span_out_of_bounds(self):
        with pytest.raises(SrlError):
            spans_to_tags([ArgumentSpan(0, 5, "A0")], 3)

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_mutual_inverse(self, data):
        length = data.draw(st.integers(1, 15))
        rng = random.Random(data.draw(st.integers(0, 2**32)))
        from corpus_builders import random_spans

        spans = sorted(random_spans(rng, length))
        tags = spans_to_tags(spans, length)
        assert validate(tags)
        assert sorted(tags_to_spans(tags)) == spans


class TestViterbi:
    def test_single_token_constraint_forced(self):
        ls = LabelSet(["A0"])
        em = np.log([[0.1, 0.2, 0.7]])  # I-A0 invalid at position 0
        assert viterbi_decode(em, ls) == ["B-A0"]

    def test_uniform_ties_to_all_outside(self):
        ls = LabelSet(["A0", "A1", "AM-TMP"])
        em = np.full((6, len(ls)), -np.log(len(ls)))
        assert viterbi_decode(em, ls) == ["O"] * 6

    def test_empty_sequence(self):
        assert viterbi_decode(np.zeros((0, 3)), LabelSet(["A0"])) == []

    def test_non_finite_rejected(self):
        ls = LabelSet(["A0"])
        em = np.array([[0.0, float("nan"), 0.0]])
        with pytest.raises(SrlError):
            viterbi_decode(em, ls)

    def test_column_count_mismatch(self):
        with pytest.raises(SrlError):
            viterbi_decode(np.zeros((2, 4)), LabelSet(["A0"]))

    def test_matches_brute_force(self):
        rng = random.Random(7)
        roles = ["A0", "A1", "AM-TMP", "R-A0"]
        for trial in range(200):
            n_roles = rng.randint(1, 4)
            ls = LabelSet(roles[:n_roles])
            n_tokens = rng.randint(1, 5)
            em = random_logprobs(rng, n_tokens, len(ls))
            got = viterbi_decode(em, ls)
            want, want_score = brute_force_decode(em, ls)
            assert got == want, f"trial {trial}"
            assert math.isclose(sequence_score(em, got, ls), want_score, abs_tol=1e-9)

    def test_output_always_valid(self):
        rng = random.Random(11)
        ls = LabelSet(["A0", "A1", "AM-TMP", "C-A1"])
        for _ in range(300):
            em = random_logprobs(rng, rng.randint(1, 40), len(ls))
            assert validate(viterbi_decode(em, ls))

    def test_shift_invariance(self):
        rng = random.Random(3)
        ls = LabelSet(["A0", "A1"])
        em = random_logprobs(rng, 8, len(ls))
        base = viterbi_decode(em, ls)
        assert viterbi_decode(em + 3.7, ls) == base
        shifted = em.copy()
        shifted[4, :] += 11.0  # shifting one token's whole score vector
        assert viterbi_decode(shifted, ls) == base


class TestEmissionFile:
    def test_roundtrip(self, tmp_path, rng):
        ls = LabelSet(["A0", "AM-TMP"])
        mats = [
            EmissionMatrix("s1-p0", random_logprobs(rng, 3, len(ls))),
            EmissionMatrix("s2-p1", random_logprobs(rng, 1, len(ls))),
        ]
        path = tmp_path / "e.tsv"
        write_emissions(path, ls, mats)
        ls2, mats2 = read_emissions(path)
        assert ls2 == ls
        assert [m.instance_id for m in mats2] == ["s1-p0", "s2-p1"]
        for a, b in zip(mats, mats2):
            assert np.allclose(a.scores, b.scores, atol=1e-9)

    def test_rows_must_be_distributions(self, tmp_path):
        ls = LabelSet(["A0"])
        path = tmp_path / "bad.tsv"
        write_emissions(path, ls, [EmissionMatrix("x", np.zeros((2, 3)))])
        with pytest.raises(SrlError, match="not 1"):
            read_emissions(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "no_header.tsv"
        path.write_text("#instance\tx\t1\n0\t0\t0\n")
        with pytest.raises(SrlError):
            read_emissions(path)
