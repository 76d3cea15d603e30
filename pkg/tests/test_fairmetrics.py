import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothodds.curvelab import CurveParams, construct, eval_phi, lipschitz
from smoothodds.dataset import group_distribution
from smoothodds.fairmetrics import (
    OddsImage,
    eo_components,
    eo_gap,
    eo_gap_mean,
    euclidean,
    expected_accuracy,
    gower,
    hamming,
    individual_odds_satisfied,
    max_pairwise_eo_gap,
    odds_distance,
    odds_image,
)
from smoothodds.rates import achieved_rates

from conftest import make_dataset

FAMILIES = ["fixed", "linear", "quadratic", "cubic", "quartic"]


def record_level(rows, group, cp):
    """(fpr, tpr, accuracy) straight from the weighted records."""
    num = {0: 0.0, 1: 0.0}
    den = {0: 0.0, 1: 0.0}
    for s, g, y, w in rows:
        if g != group:
            continue
        num[y] += w * eval_phi(cp, s)
        den[y] += w
    fpr, tpr = num[0] / den[0], num[1] / den[1]
    acc = (num[1] + den[0] - num[0]) / (den[0] + den[1])
    return fpr, tpr, acc


@st.composite
def rows_and_rule(draw):
    n = draw(st.integers(2, 25))
    rows = [
        (float(draw(st.integers(0, 100))), "a", draw(st.integers(0, 1)), float(draw(st.integers(1, 50))))
        for _ in range(n)
    ]
    rows += [(0.0, "a", 0, 1.0), (100.0, "a", 1, 1.0)]
    family = draw(st.sampled_from(FAMILIES))
    p = draw(st.floats(0.4, 0.6) if family == "quartic" else st.floats(0.05, 0.95))
    t0 = draw(st.floats(0, 90))
    t1 = draw(st.floats(t0 + 1, 100))
    return rows, construct(family, t0, t1, p)


@settings(max_examples=150, deadline=None)
@given(rows_and_rule())
def test_rates_and_accuracy_match_record_sums(data):
    rows, cp = data
    dist = group_distribution(make_dataset(rows), "a")
    fpr, tpr, acc = record_level(rows, "a", cp)
    point = achieved_rates(dist, cp)
    assert point.fpr == pytest.approx(fpr, abs=1e-12)
    assert point.tpr == pytest.approx(tpr, abs=1e-12)
    assert expected_accuracy(dist, cp) == pytest.approx(acc, abs=1e-12)


def test_eo_gap_on_hand_fixture(tiny):
    a, b = group_distribution(tiny, "a"), group_distribution(tiny, "b")
    rule = CurveParams.single_threshold("linear", 2.0)
    # a: fpr 4/8, tpr 9/10; b: fpr 4/9, tpr 6/8
    g0, g1 = eo_components(a, rule, b, rule)
    assert g0 == pytest.approx(0.5 - 4 / 9)
    assert g1 == pytest.approx(0.9 - 0.75)
    assert eo_gap(a, rule, b, rule) == pytest.approx(0.15)
    assert eo_gap_mean(a, rule, b, rule) == pytest.approx((0.5 - 4 / 9 + 0.15) / 2)
    assert eo_gap(a, rule, a, rule) == 0.0


def test_max_pairwise_eo_gap_by_enumeration(small_credit):
    dists = {g: group_distribution(small_credit, g) for g in small_credit.groups}
    rules = {g: construct("linear", 20 + 5 * k, 60 + 3 * k, 0.3 + 0.1 * k) for k, g in enumerate(dists)}
    expected = max(eo_gap(dists[a], rules[a], dists[b], rules[b]) for a, b in combinations(dists, 2))
    assert max_pairwise_eo_gap(dists, rules) == expected


# --- odds images ------------------------------------------------------------------


def test_odds_image_of_step_rules():
    single = CurveParams.single_threshold("linear", 30.0)
    assert odds_image(single, (0, 100)).points == (0.0, 1.0)
    assert odds_image(single, (30, 100)).points == (1.0,)
    assert odds_image(single, (0, 29)).points == (0.0,)
    fixed = construct("fixed", 25, 50, 0.5)
    assert odds_image(fixed, (0, 100)).points == (0.0, 0.5, 1.0)
    assert odds_image(fixed, (30, 40)).points == (0.5,)
    assert odds_image(fixed, (50, 60)).points == (1.0,)


@settings(max_examples=100, deadline=None)
@given(rows_and_rule(), st.floats(-20, 120), st.floats(0, 80))
def test_odds_image_covers_sampled_values(data, lo, span):
    _, cp = data
    rng = (lo, lo + span)
    image = odds_image(cp, rng)
    samples = eval_phi(cp, np.linspace(rng[0], rng[1], 2001))
    assert all(image.contains_value(v) for v in samples)
    if cp.family.continuous and not cp.is_single_threshold:
        # the image is exactly the sampled range for a continuous curve
        (lo_v, hi_v), = image.intervals or ((image.points[0], image.points[0]),)
        assert lo_v == pytest.approx(samples.min(), abs=1e-12)
        assert hi_v == pytest.approx(samples.max(), abs=1e-12)


def test_odds_image_normalisation():
    img = OddsImage(intervals=((0.2, 0.5), (0.4, 0.7), (0.9, 0.9)), points=(0.3, 1.0))
    assert img.intervals == ((0.2, 0.7),)
    assert img.points == (0.9, 1.0)
    assert str(img) == "[0.2, 0.7] U {0.9} U {1}"
    with pytest.raises(ValueError):
        OddsImage(intervals=((0.5, 0.2),))


def test_individual_odds():
    rng = (0.0, 100.0)
    fixed = {"a": construct("fixed", 20, 40, 0.3), "b": construct("fixed", 30, 60, 0.6)}
    report = individual_odds_satisfied({g: odds_image(cp, rng) for g, cp in fixed.items()})
    assert not report.satisfied
    assert set(report.violations()) == {("a", "b"), ("b", "a")}

    smooth = {"a": construct("cubic", 20, 40, 0.3), "b": construct("quadratic", 30, 60, 0.6)}
    assert individual_odds_satisfied({g: odds_image(cp, rng) for g, cp in smooth.items()}).satisfied

    mixed = {"base": CurveParams.single_threshold("linear", 50), "a": construct("linear", 20, 40, 0.3)}
    report = individual_odds_satisfied({g: odds_image(cp, rng) for g, cp in mixed.items()})
    assert report.pairs == {("base", "a"): True, ("a", "base"): False}

    with pytest.raises(ValueError):
        individual_odds_satisfied({"a": odds_image(fixed["a"], rng)})


@settings(max_examples=200, deadline=None)
@given(rows_and_rule(), st.floats(-10, 110), st.floats(-10, 110))
def test_odds_distance_bounded_by_lipschitz(data, r1, r2):
    _, cp = data
    d = odds_distance(cp, r1, r2)
    assert 0.0 <= d <= 1.0
    if cp.family.continuous and not cp.is_single_threshold:
        assert d <= lipschitz(cp) * abs(r1 - r2) * (1 + 1e-9) + 1e-12


# --- input-space distances ---------------------------------------------------------


def test_distances_by_hand():
    assert euclidean([0, 0], [3, 4]) == 5.0
    assert hamming(["a", 1, "x"], ["a", 2, "y"]) == 2
    # numeric sim 1 - 10/40 = 0.75, categorical mismatch 0 -> S = 0.375
    assert gower([30, "m"], [40, "f"], [40, None]) == pytest.approx(math.sqrt(0.625))
    assert gower([5, "m"], [5, "m"], [0, None]) == 0.0
    with pytest.raises(ValueError):
        gower([1], [2], [0])
    with pytest.raises(ValueError):
        euclidean([1], [1, 2])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=6))
def test_gower_is_bounded_and_symmetric(pairs):
    x1 = [a for a, _ in pairs]
    x2 = [b for _, b in pairs]
    ranges = [10.0] * len(pairs)
    d = gower(x1, x2, ranges)
    assert 0.0 <= d <= 1.0
    assert d == gower(x2, x1, ranges)
    assert gower(x1, x1, ranges) == 0.0
