"""Group-fairness gaps, expected accuracy, classification-odds images and distances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Mapping, Sequence

import numpy as np

from .curvelab import CurveFamily, CurveParams, eval_phi, lipschitz
from .dataset import GroupDistribution
from .rates import rate_pair

_EPS = 1e-12


def expected_accuracy(dist: GroupDistribution, cp: CurveParams) -> float:
    """E[y phi(r) + (1 - y)(1 - phi(r))] over the group's weighted joint distribution."""
    phi = np.asarray(eval_phi(cp, np.asarray(dist.support, dtype=float)), dtype=float)
    pi = dist.base_rate
    acc = 0.0
    if 1 not in dist.empty_classes:
        acc += pi * float(phi @ dist.cond_mass[1])
    if 0 not in dist.empty_classes:
        acc += (1.0 - pi) * (1.0 - float(phi @ dist.cond_mass[0]))
    return acc


def eo_components(
    dist_a: GroupDistribution, cp_a: CurveParams, dist_b: GroupDistribution, cp_b: CurveParams
) -> tuple[float, float]:
    """``|P(Yhat=1 | a, y) - P(Yhat=1 | b, y)|`` for y = 0 and y = 1."""
    fa, ta = rate_pair(dist_a, cp_a)
    fb, tb = rate_pair(dist_b, cp_b)
    return abs(fa - fb), abs(ta - tb)


def eo_gap(dist_a: GroupDistribution, cp_a: CurveParams, dist_b: GroupDistribution, cp_b: CurveParams) -> float:
    return max(eo_components(dist_a, cp_a, dist_b, cp_b))


def eo_gap_mean(dist_a: GroupDistribution, cp_a: CurveParams, dist_b: GroupDistribution, cp_b: CurveParams) -> float:
    """Average of the two class-conditional gaps (the alternative EO reduction)."""
    g0, g1 = eo_components(dist_a, cp_a, dist_b, cp_b)
    return (g0 + g1) / 2.0


# --- classification-odds images --------------------------------------------


@dataclass(frozen=True)
class OddsImage:
    """The set {phi(r) : r in the score range} as closed intervals plus isolated points."""

    intervals: tuple[tuple[float, float], ...] = ()
    points: tuple[float, ...] = ()

    def __post_init__(self):
        ivs = sorted((float(lo), float(hi)) for lo, hi in self.intervals)
        merged: list[tuple[float, float]] = []
        for lo, hi in ivs:
            if hi < lo:
                raise ValueError(f"interval ({lo}, {hi}) is reversed")
            if merged and lo <= merged[-1][1] + _EPS:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        # degenerate intervals are points
        pts = {float(v) for v in self.points} | {lo for lo, hi in merged if hi - lo <= _EPS}
        merged = [iv for iv in merged if iv[1] - iv[0] > _EPS]
        pts = sorted(v for v in pts if not any(lo - _EPS <= v <= hi + _EPS for lo, hi in merged))
        object.__setattr__(self, "intervals", tuple(merged))
        object.__setattr__(self, "points", tuple(pts))

    def contains_value(self, v: float) -> bool:
        return any(lo - _EPS <= v <= hi + _EPS for lo, hi in self.intervals) or any(
            abs(v - q) <= _EPS for q in self.points
        )

    def issubset(self, other: "OddsImage") -> bool:
        for lo, hi in self.intervals:
            if not any(olo - _EPS <= lo and hi <= ohi + _EPS for olo, ohi in other.intervals):
                return False
        return all(other.contains_value(v) for v in self.points)

    def to_json(self) -> dict:
        return {"intervals": [list(iv) for iv in self.intervals], "points": list(self.points)}

    def __str__(self) -> str:
        parts = [f"[{lo:.6g}, {hi:.6g}]" for lo, hi in self.intervals] + [f"{{{v:.6g}}}" for v in self.points]
        return " U ".join(parts) if parts else "{}"


def odds_image(cp: CurveParams, score_range: tuple[float, float]) -> OddsImage:
    """Exact image of the rule over ``[lo, hi]``, derived from family and thresholds."""
    lo, hi = float(score_range[0]), float(score_range[1])
    if lo > hi:
        raise ValueError("score_range is reversed")
    if cp.is_single_threshold:
        pts = ([0.0] if lo < cp.t0 else []) + ([1.0] if hi >= cp.t0 else [])
        return OddsImage(points=tuple(pts))
    if cp.family is CurveFamily.FIXED:
        pts = []
        if lo < cp.t0:
            pts.append(0.0)
        if cp.t0 <= hi and lo < cp.t1:
            pts.append(cp.p)
        if hi >= cp.t1:
            pts.append(1.0)
        return OddsImage(points=tuple(pts))
    # continuous and monotone, so the image of an interval is an interval
    return OddsImage(intervals=((float(eval_phi(cp, lo)), float(eval_phi(cp, hi))),))


@dataclass(frozen=True)
class OddsReport:
    pairs: Mapping[tuple[str, str], bool]

    @property
    def satisfied(self) -> bool:
        return all(self.pairs.values())

    def violations(self) -> list[tuple[str, str]]:
        return [k for k, ok in self.pairs.items() if not ok]


def individual_odds_satisfied(images: Mapping[str, OddsImage]) -> OddsReport:
    """For every ordered pair (a, b): can every odds value offered to a also be offered to b?"""
    if len(images) < 2:
        raise ValueError("individual odds need at least two groups")
    return OddsReport({(a, b): images[a].issubset(images[b]) for a, b in permutations(images, 2)})


def odds_distance(cp: CurveParams, r1: float, r2: float) -> float:
    return abs(float(eval_phi(cp, r1)) - float(eval_phi(cp, r2)))


# --- input-space distances -----------------------------------------------------


def _same_length(x1: Sequence, x2: Sequence) -> None:
    if len(x1) != len(x2):
        raise ValueError(f"vectors differ in length: {len(x1)} vs {len(x2)}")


def euclidean(x1: Sequence[float], x2: Sequence[float]) -> float:
    _same_length(x1, x2)
    return float(np.linalg.norm(np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float)))


def hamming(x1: Sequence, x2: Sequence) -> int:
    _same_length(x1, x2)
    return sum(a != b for a, b in zip(x1, x2))


def gower(x1: Sequence, x2: Sequence, ranges: Sequence[float | None]) -> float:
    """Gower distance ``sqrt(1 - S)``.

    ``ranges[k]`` is the declared range of numeric feature k, or None for a
    categorical feature (compared by equality).
    """
    _same_length(x1, x2)
    _same_length(x1, ranges)
    if not x1:
        raise ValueError("gower distance needs at least one feature")
    sims = []
    for a, b, rng in zip(x1, x2, ranges):
        if rng is None:
            sims.append(1.0 if a == b else 0.0)
            continue
        rng = float(rng)
        diff = abs(float(a) - float(b))
        if rng <= 0:
            if diff != 0:
                raise ValueError(f"numeric feature has non-positive range {rng} but values differ")
            sims.append(1.0)
            continue
        sims.append(1.0 - min(diff / rng, 1.0))
    return math.sqrt(max(0.0, 1.0 - sum(sims) / len(sims)))


@dataclass(frozen=True)
class GroupMetrics:
    group: str
    expected_accuracy: float
    eo_gap: float
    eo_gap_mean: float
    lipschitz: float
    odds_image: OddsImage


def group_metrics(
    group: str,
    dist: GroupDistribution,
    cp: CurveParams,
    baseline_dist: GroupDistribution,
    baseline_cp: CurveParams,
    score_range: tuple[float, float],
) -> GroupMetrics:
    """Metrics of one group, with EO measured against the baseline group."""
    g0, g1 = eo_components(dist, cp, baseline_dist, baseline_cp)
    return GroupMetrics(
        group=group,
        expected_accuracy=expected_accuracy(dist, cp),
        eo_gap=max(g0, g1),
        eo_gap_mean=(g0 + g1) / 2.0,
        lipschitz=lipschitz(cp),
        odds_image=odds_image(cp, score_range),
    )


def max_pairwise_eo_gap(dists: Mapping[str, GroupDistribution], rules: Mapping[str, CurveParams]) -> float:
    names = list(rules)
    best = 0.0
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            best = max(best, eo_gap(dists[a], rules[a], dists[b], rules[b]))
    return best
