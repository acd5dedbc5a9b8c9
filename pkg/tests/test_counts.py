import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcx.core import EMPTY, Alphabet
from rcx.counts import CountIndex, NaiveCountIndex, Sample, brute_force_count
from rcx.errors import InvalidSampleError, ParameterError


@st.composite
def samples(draw, max_n=40):
    k = draw(st.integers(1, 3))
    data = draw(st.lists(st.integers(0, k - 1), min_size=1, max_size=max_n))
    return Sample(Alphabet.of("abc"[:k]), data)


def test_hand_counts(aabab):
    idx = CountIndex(aabab)
    a = aabab.alphabet
    assert idx.count(a.encode("ab"), 5) == 2
    assert idx.count(a.encode("a"), 4) == 3
    assert idx.count(EMPTY, 4) == 5
    assert idx.count(a.encode("ba"), 4) == 1
    assert idx.count(a.encode("bb"), 5) == 0


def test_left_extensions_of_b(aabab):
    idx = CountIndex(aabab)
    a = aabab.alphabet
    got = {a.decode(w) for w in idx.occurring_left_extensions(a.encode("b"))}
    assert got == {"b", "ab", "aab"}


def test_distinct_substrings_aaba(ab):
    # a, b, aa, ab, ba, aab, aba, aaba and the empty string
    idx = CountIndex(Sample.from_text(ab, "aabab"))
    assert idx.distinct_substrings() == 9


def test_bad_samples():
    with pytest.raises(InvalidSampleError):
        Sample(Alphabet.binary(), [])
    with pytest.raises(InvalidSampleError):
        Sample(Alphabet.binary(), [0, 2])


def test_horizon_guard(aabab):
    with pytest.raises(ParameterError):
        CountIndex(aabab).count((0,), 3)


def test_single_symbol_sample():
    idx = CountIndex(Sample(Alphabet.binary(), [1]))
    assert idx.count(EMPTY, 0) == 1
    assert idx.count((1,), 1) == 1
    assert idx.count((1,), 0) == 0
    assert idx.distinct_substrings() == 1


@given(samples(), st.data())
def test_counts_match_brute_force(sample, data):
    idx = CountIndex(sample)
    n = sample.n
    k = sample.alphabet.size
    w = tuple(data.draw(st.lists(st.integers(0, k - 1), max_size=6)))
    if data.draw(st.booleans()) and n > 1:
        i = data.draw(st.integers(0, n - 1))
        j = data.draw(st.integers(i, n))
        w = sample.data[i:j]
    for h in (n - 1, n):
        assert idx.count(w, h) == brute_force_count(sample.data, w, h)


@given(samples(max_n=25))
def test_automaton_matches_naive_index(sample):
    idx = CountIndex(sample)
    naive = NaiveCountIndex(sample)
    subs = naive.substrings(sample.n - 1)
    assert idx.distinct_substrings() == len(subs)
    for w in subs:
        for h in (sample.n - 1, sample.n):
            assert idx.count(w, h) == naive.count(w, h)
        assert idx.occurring_left_extensions(w) == naive.occurring_left_extensions(w)
        v = idx.locate(w)
        assert w in set(idx.class_strings(v))


@given(samples())
def test_next_counts_sum_to_occurrences(sample):
    # Σ_a N_n(wa) = N_{n-1}(w) for every occurring w
    idx = CountIndex(sample)
    assert np.array_equal(idx.next_counts.sum(axis=1), idx.occurrences)
    for v in range(idx.num_states):
        w = idx.representative(v)
        row = [idx.count(w + (a,), sample.n) for a in range(sample.alphabet.size)]
        assert row == idx.next_counts[v].tolist()


@given(samples(), st.data())
def test_extend_left_agrees_with_locate(sample, data):
    idx = CountIndex(sample)
    k = sample.alphabet.size
    past = tuple(data.draw(st.lists(st.integers(0, k - 1), max_size=sample.n + 3)))
    states = list(idx.walk_left(past))
    for h, v in enumerate(states):
        w = past[len(past) - h:] if h else EMPTY
        assert v == idx.locate(w)
    if states[-1] is not None:
        assert len(states) == len(past) + 1


@given(samples())
def test_aggregate_of_ones_is_occurrences(sample):
    idx = CountIndex(sample)
    agg = idx.aggregate(np.ones(sample.n))
    assert np.allclose(agg, idx.occurrences)
