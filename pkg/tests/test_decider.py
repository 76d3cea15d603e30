import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothodds.curvelab import CurveParams, construct
from smoothodds.dataset import ScoreRecord
from smoothodds.decider import decide, decide_arrays, decide_batch, uniform_at, uniforms
from smoothodds.errors import MissingRuleError

from conftest import make_dataset


def sequential(seed, n):
    words = np.random.Philox(key=seed).random_raw(n)
    return (words >> np.uint64(11)).astype(float) * 2.0**-53


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**128 - 1), st.integers(0, 50), st.integers(0, 40))
def test_random_access_matches_sequential_stream(seed, start, count):
    stream = sequential(seed, start + count)
    np.testing.assert_array_equal(uniforms(seed, start, count), stream[start:])


def test_uniforms_are_in_unit_interval():
    u = uniforms(123, 0, 100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005


@pytest.mark.parametrize("seed", [-1, 2**128, 1.5, True, "7"])
def test_bad_seeds(seed):
    with pytest.raises(ValueError):
        uniforms(seed, 0, 1)


def test_decide_is_a_pure_function_of_seed_and_index():
    rule = {"a": construct("linear", 0, 10, 0.4)}
    rec = ScoreRecord(6.0, "a", 1)
    first = decide(rule, rec, seed=9, index=41)
    assert decide(rule, rec, seed=9, index=41) == first
    assert first.outcome == int(uniform_at(9, 41) < first.probability)
    assert first.draw_index == 41
    with pytest.raises(ValueError):
        decide(rule, rec, seed=9, index=-1)


def test_certain_probabilities():
    rules = {"a": CurveParams.single_threshold("linear", 5.0)}
    for i in range(200):
        assert decide(rules, ScoreRecord(5.0, "a", 0), 3, i).outcome == 1
        assert decide(rules, ScoreRecord(4.9, "a", 0), 3, i).outcome == 0


def test_missing_rule():
    with pytest.raises(MissingRuleError, match="'b'"):
        decide({"a": construct("linear", 0, 1, 0.5)}, ScoreRecord(0.5, "b", 1), 0, 0)


def test_batch_expands_weights_in_record_order():
    ds = make_dataset([(1.0, "a", 1, 2), (5.0, "b", 0, 0), (3.0, "a", 0, 3), (6.0, "b", 1, 1)])
    rules = {"a": construct("linear", 0, 4, 0.5), "b": construct("fixed", 0, 10, 0.5)}
    batch = decide_batch(rules, ds, seed=5)
    assert [d.record.score for d in batch] == [1.0, 1.0, 3.0, 3.0, 3.0, 6.0]
    assert [d.draw_index for d in batch] == list(range(6))
    for d in batch:
        assert d == decide(rules, d.record, 5, d.draw_index)


def test_fractional_weights_are_rejected():
    ds = make_dataset([(1.0, "a", 1, 2.5)])
    with pytest.raises(ValueError, match="fractional"):
        decide_arrays({"a": construct("linear", 0, 4, 0.5)}, ds, seed=0)


def test_arrays_with_offset_continue_the_stream():
    ds = make_dataset([(1.0, "a", 1, 4), (3.0, "a", 0, 4)])
    rules = {"a": construct("cubic", 0, 4, 0.3)}
    whole = decide_arrays(rules, ds, seed=11)
    tail = decide_arrays(rules, ds, seed=11, start=8)
    np.testing.assert_array_equal(tail["draw_index"], np.arange(8, 16))
    np.testing.assert_array_equal(tail["probability"], whole["probability"])
    np.testing.assert_array_equal(tail["outcome"], uniforms(11, 8, 8) < whole["probability"])


def test_empirical_frequency_tracks_probability():
    ds = make_dataset([(2.0, "a", 1, 50_000), (7.0, "a", 0, 50_000)])
    cp = construct("quadratic", 0, 10, 0.5)
    a = decide_arrays({"a": cp}, ds, seed=2024)
    for score, rec in ((2.0, 0), (7.0, 1)):
        sel = a["record"] == rec
        p = a["probability"][sel][0]
        sigma = np.sqrt(p * (1 - p) / sel.sum())
        assert abs(a["outcome"][sel].mean() - p) < 4 * sigma
