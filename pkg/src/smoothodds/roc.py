"""ROC curves, their concave hulls, and the shared equalized-odds target."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .dataset import GroupDistribution

FEASIBILITY_TOL = 1e-12
BASELINE_TOL = 1e-9


@dataclass(frozen=True)
class OperatingPoint:
    fpr: float
    tpr: float

    def __post_init__(self):
        for name in ("fpr", "tpr"):
            v = float(getattr(self, name))
            if not (-1e-12 <= v <= 1.0 + 1e-12):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, min(1.0, max(0.0, v)))

    def distance(self, other: "OperatingPoint") -> float:
        return math.hypot(self.fpr - other.fpr, self.tpr - other.tpr)

    def as_tuple(self) -> tuple[float, float]:
        return (self.fpr, self.tpr)


def tail_masses(dist: GroupDistribution) -> tuple[np.ndarray, np.ndarray]:
    """``tail[y][k] = P(R >= support[k] | y)`` for k = 0..n, with ``tail[y][n] = 0``.

    Summed from the top so small tail probabilities keep full precision.
    """
    out = []
    for y in (0, 1):
        m = np.asarray(dist.cond_mass[y], dtype=float)
        t = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]])
        t[0] = 1.0
        out.append(t)
    return out[0], out[1]


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Empirical ROC of one group, ordered by descending threshold.

    The first point belongs to the ``+inf`` threshold (0, 0), the last to
    ``-inf`` (1, 1); in between, one point per support score ``t`` with rates
    P(R >= t | y).
    """

    group: str
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(x), float(y)) for x, y in zip(self.fpr, self.tpr)]

    @cached_property
    def hull(self) -> np.ndarray:
        """Vertices of the upper concave envelope, sorted by fpr, from (0,0) to (1,1)."""
        return upper_hull(np.column_stack([self.fpr, self.tpr]))

    def envelope(self, fpr):
        """Upper envelope value at ``fpr`` (piecewise-linear interpolation of the hull)."""
        h = self.hull
        return np.interp(fpr, h[:, 0], h[:, 1])

    def auc(self) -> float:
        """Trapezoid area under the empirical ROC polyline."""
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))


def roc_curve(dist: GroupDistribution) -> RocCurve:
    dist.require_both_classes("the ROC curve")
    tail0, tail1 = tail_masses(dist)
    support = np.asarray(dist.support, dtype=float)
    thresholds = np.concatenate([[math.inf], support[::-1], [-math.inf]])
    fpr = np.concatenate([[0.0], tail0[:-1][::-1], [1.0]])
    tpr = np.concatenate([[0.0], tail1[:-1][::-1], [1.0]])
    # enforce monotone order against round-off in the tail sums
    fpr = np.maximum.accumulate(fpr)
    tpr = np.maximum.accumulate(tpr)
    return RocCurve(dist.group, thresholds, fpr, tpr)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def upper_hull(points) -> np.ndarray:
    """Upper concave envelope of ``points`` plus (0,0) and (1,1) (monotone chain)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    pts = np.vstack([pts, [[0.0, 0.0], [1.0, 1.0]]])
    # highest tpr per fpr, sorted by fpr
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = np.concatenate([[True], np.diff(pts[:, 0]) != 0])
    pts = pts[keep]
    hull: list[np.ndarray] = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    return np.array(hull)


def is_feasible(point: OperatingPoint, roc: RocCurve, tol: float = FEASIBILITY_TOL) -> bool:
    """On or above the diagonal and on or below the group's concave ROC envelope."""
    x, y = point.fpr, point.tpr
    return bool(y >= x - tol and y <= float(roc.envelope(x)) + tol)


def accuracy_optimal_threshold(dist: GroupDistribution, prevalence_weighting: bool = True) -> tuple[float, float]:
    """Single threshold (classify ``r >= t`` positive) with the best expected accuracy.

    With ``prevalence_weighting=False`` the two classes count equally (balanced
    accuracy). Ties go to the larger threshold. ``-inf`` stands for "everyone
    positive" and ``+inf`` for "everyone negative".
    """
    dist.require_both_classes("accuracy-optimal thresholding")
    tail0, tail1 = tail_masses(dist)
    pi = dist.base_rate if prevalence_weighting else 0.5
    support = np.asarray(dist.support, dtype=float)
    # candidate k uses threshold support[k]; k = 0 is the same rule as -inf
    thresholds = np.concatenate([[-math.inf], support[1:], [math.inf]])
    acc = pi * tail1 + (1.0 - pi) * (1.0 - tail0)
    best = float(acc.max())
    k = int(np.nonzero(acc >= best - 1e-12)[0][-1])
    return float(thresholds[k]), float(acc[k])


class TargetSelection(NamedTuple):
    baseline: str
    target: OperatingPoint


def _segment_intersection(p1, p2, q1, q2):
    d1, d2 = p2 - p1, q2 - q1
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) < 1e-15:
        return None
    w = q1 - p1
    s = (w[0] * d2[1] - w[1] * d2[0]) / den
    u = (w[0] * d1[1] - w[1] * d1[0]) / den
    if -1e-12 <= s <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
        return p1 + s * d1
    return None


def _projection(p1, p2, point):
    d = p2 - p1
    denom = float(d @ d)
    if denom == 0:
        return p1
    s = min(1.0, max(0.0, float((point - p1) @ d) / denom))
    return p1 + s * d


def _as_curves(rocs: Iterable[RocCurve] | Mapping[str, RocCurve]) -> list[RocCurve]:
    curves = list(rocs.values()) if isinstance(rocs, Mapping) else list(rocs)
    if not curves:
        raise ValueError("select_target needs at least one ROC curve")
    return curves


def select_target(rocs: Iterable[RocCurve] | Mapping[str, RocCurve]) -> TargetSelection:
    """Point of the common feasible region closest (Euclidean) to (0, 1), and its baseline group.

    The region is the intersection of every group's hull with ``tpr >= fpr``, a
    convex polygon, so the optimum is one of: a hull vertex, a crossing of two
    edges (the diagonal included), or the projection of (0, 1) onto an edge.
    All such candidates are enumerated and the feasible one nearest (0, 1) wins.

    The baseline is a group whose envelope passes within 1e-9 of the target,
    the lexicographically smallest name if several do.
    """
    curves = _as_curves(rocs)
    diagonal = np.array([[0.0, 0.0], [1.0, 1.0]])
    edge_sets = [c.hull for c in curves] + [diagonal]
    edges = [(h[i], h[i + 1]) for h in edge_sets for i in range(len(h) - 1)]
    ideal = np.array([0.0, 1.0])

    candidates = [v for h in edge_sets for v in h]
    candidates += [_projection(a, b, ideal) for a, b in edges]
    for i in range(len(edges)):
        for j in range(i + 1, len(edges)):
            x = _segment_intersection(*edges[i], *edges[j])
            if x is not None:
                candidates.append(x)

    best = None
    for c in candidates:
        x, y = float(min(1.0, max(0.0, c[0]))), float(min(1.0, max(0.0, c[1])))
        if y < x - FEASIBILITY_TOL:
            continue
        if any(y > float(cv.envelope(x)) + FEASIBILITY_TOL for cv in curves):
            continue
        key = (math.hypot(x, 1.0 - y), x, y)
        if best is None or key < best:
            best = key
    # the diagonal endpoints are always feasible, so best is set
    _, x, y = best
    target = OperatingPoint(x, y)
    gaps = {c.group: float(c.envelope(x)) - y for c in curves}
    on_boundary = sorted((g for g, d in gaps.items() if abs(d) <= BASELINE_TOL), key=str)
    baseline = on_boundary[0] if on_boundary else min(sorted(gaps, key=str), key=lambda g: gaps[g])
    return TargetSelection(baseline, target)
