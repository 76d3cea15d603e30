"""Per-group (t0, t1, p) search so every group's randomised rule hits a shared operating point."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .curvelab import QUARTIC_P_RANGE, CurveFamily, CurveParams, construct, normalized_coefficients
from .curvelab.curves import normalized_lipschitz
from .dataset import Dataset, GroupDistribution, group_distribution
from .errors import InfeasibleTargetError, SmoothOddsError
from .fairmetrics import (
    GroupMetrics,
    group_metrics,
    individual_odds_satisfied,
    max_pairwise_eo_gap,
    OddsReport,
)
from .rates import achieved_rates
from .roc import OperatingPoint, accuracy_optimal_threshold, is_feasible, roc_curve, select_target, tail_masses

DEFAULT_P_STEP = 0.002
DEFAULT_TOLERANCE = 5e-4


def p_grid(step: float = DEFAULT_P_STEP) -> tuple[float, ...]:
    """``step, 2 step, ...`` strictly inside (0, 1), rounded to 12 decimals so 0.4 is exactly 0.4."""
    if not (0.0 < step < 1.0):
        raise ValueError(f"p step must lie in (0, 1), got {step!r}")
    n = int(math.floor(1.0 / step + 1e-9))
    values = sorted({round(k * step, 12) for k in range(1, n + 1)} - {1.0})
    return tuple(v for v in values if 0.0 < v < 1.0)


@dataclass(frozen=True)
class SearchGrid:
    """Candidate thresholds and probabilities plus the target-matching radius.

    ``threshold_candidates=None`` means every support score of the group being
    calibrated, thinned by ``threshold_stride``.
    """

    threshold_candidates: tuple[float, ...] | None = None
    p_candidates: tuple[float, ...] = field(default_factory=p_grid)
    tolerance: float = DEFAULT_TOLERANCE
    threshold_stride: int = 1

    def __post_init__(self):
        ps = tuple(float(p) for p in self.p_candidates)
        if not ps or any(b <= a for a, b in zip(ps, ps[1:])) or not (0.0 < ps[0] and ps[-1] < 1.0):
            raise ValueError("p_candidates must be non-empty, strictly increasing and inside (0, 1)")
        object.__setattr__(self, "p_candidates", ps)
        if self.threshold_candidates is not None:
            ts = tuple(float(t) for t in self.threshold_candidates)
            if not ts or any(b <= a for a, b in zip(ts, ts[1:])) or not all(map(math.isfinite, ts)):
                raise ValueError("threshold_candidates must be non-empty, finite and strictly increasing")
            object.__setattr__(self, "threshold_candidates", ts)
        if not (self.tolerance >= 0):
            raise ValueError("tolerance must be non-negative")
        if not isinstance(self.threshold_stride, int) or self.threshold_stride < 1:
            raise ValueError("threshold_stride must be a positive integer")

    @classmethod
    def with_step(cls, p_step: float = DEFAULT_P_STEP, **kw) -> "SearchGrid":
        return cls(p_candidates=p_grid(p_step), **kw)

    def thresholds_for(self, dist: GroupDistribution) -> np.ndarray:
        if self.threshold_candidates is not None:
            return np.asarray(self.threshold_candidates, dtype=float)
        support = np.asarray(dist.support, dtype=float)
        picked = support[:: self.threshold_stride]
        if picked[-1] != support[-1]:
            picked = np.append(picked, support[-1])
        return picked


@dataclass(frozen=True)
class GroupFit:
    """Outcome of one group's search."""

    rule: CurveParams
    achieved: OperatingPoint
    distance: float
    within_tolerance: bool


@lru_cache(maxsize=64)
def _family_tables(family: CurveFamily, ps: tuple[float, ...]):
    """Padded segment coefficients (P, 5) and normalised Lipschitz constants per p."""
    c0 = np.zeros((len(ps), 5))
    c1 = np.zeros((len(ps), 5))
    lip = np.full(len(ps), math.inf)
    for n, p in enumerate(ps):
        s0, s1 = normalized_coefficients(family, p)
        c0[n, : len(s0)] = s0
        c1[n, : len(s1)] = s1
        if family is not CurveFamily.FIXED:
            lip[n] = normalized_lipschitz(CurveParams(family, 0.0, 1.0, p, s0, s1))
    return c0, c1, lip


def _p_candidates(family: CurveFamily, grid: SearchGrid) -> tuple[float, ...]:
    ps = grid.p_candidates
    if family is CurveFamily.QUARTIC:
        lo, hi = QUARTIC_P_RANGE
        ps = tuple(p for p in ps if lo <= p <= hi)
    return ps


class _Pool:
    """Accumulates within-tolerance candidates and the overall closest one."""

    def __init__(self):
        self.chunks: list[np.ndarray] = []
        self.closest: tuple | None = None

    def add(self, dist, acc, width, lip, i, j, k, tol):
        shape = np.shape(dist)
        dist, acc, width, lip, i, j, k = (np.broadcast_to(a, shape).ravel() for a in (dist, acc, width, lip, i, j, k))
        n = int(np.argmin(dist))
        key = (float(dist[n]), int(i[n]), int(j[n]), int(k[n]))
        if self.closest is None or key < self.closest:
            self.closest = key
        sel = dist <= tol
        if sel.any():
            self.chunks.append(np.column_stack([acc[sel], width[sel], lip[sel], i[sel], j[sel], k[sel]]))

    def best(self, slack: float):
        if not self.chunks:
            return None
        pool = np.vstack(self.chunks)
        keep = pool[:, 0] >= pool[:, 0].max() - slack
        pool = pool[keep]
        order = np.lexsort((pool[:, 5], pool[:, 4], pool[:, 3], pool[:, 2], pool[:, 1]))
        _, _, _, i, j, k = pool[order[0]]
        return int(i), int(j), int(k)


def fit_group(
    dist: GroupDistribution,
    family: CurveFamily | str,
    target: OperatingPoint,
    grid: SearchGrid | None = None,
    single_only: bool = False,
    check_feasible: bool = True,
) -> GroupFit:
    """Exhaustive grid search for the rule whose expected rates land on ``target``.

    Candidates are every single threshold (including the +-inf sentinels) and
    every (t0 < t1, p) triple. Among candidates within ``grid.tolerance``
    (Euclidean, in ROC space) those whose expected accuracy is within
    ``tolerance`` of the best are kept, then the narrowest interval wins, then
    the smallest Lipschitz constant, then the lexicographically first
    (t0, t1, p) index. If nothing is within tolerance the closest candidate is
    returned with ``within_tolerance=False``.
    """
    family = CurveFamily.parse(family)
    grid = grid or SearchGrid()
    dist.require_both_classes("calibration")
    if check_feasible and not is_feasible(target, roc_curve(dist), tol=1e-9):
        raise InfeasibleTargetError(
            f"group {dist.group!r}: target ({target.fpr:.6g}, {target.tpr:.6g}) is outside its feasible region"
        )
    support = np.asarray(dist.support, dtype=float)
    m0, m1 = (np.asarray(dist.cond_mass[y], dtype=float) for y in (0, 1))
    tail0, tail1 = tail_masses(dist)
    pi = dist.base_rate
    xt, yt = target.fpr, target.tpr
    tol = grid.tolerance
    T = grid.thresholds_for(dist)
    nT = T.size
    pos = np.searchsorted(support, T, side="left")
    pool = _Pool()

    # single thresholds: T, then -inf and +inf
    single_pos = np.concatenate([pos, [0, support.size]])
    f, t = tail0[single_pos], tail1[single_pos]
    idx = np.arange(nT + 2)
    pool.add(np.hypot(f - xt, t - yt), pi * t + (1 - pi) * (1 - f), np.zeros(1), np.full(1, math.inf), idx, idx, np.zeros(1, int), tol)

    ps = _p_candidates(family, grid)
    if not single_only and ps and nT >= 2:
        c0, c1, lip = _family_tables(family, ps)
        deg = 1 if family is CurveFamily.FIXED else 5
        pv = np.asarray(ps)
        tail0, tail1 = tail_masses(dist)
        # A monotone rule on [t0, t1) mixes single thresholds inside that
        # interval, so its rates lie in the box spanned by the rates at t0 and
        # t1. Pairs whose box misses the target disk cannot match.
        reach_hi = (tail0[pos] >= xt - tol) & (tail1[pos] >= yt - tol)
        reach_lo = (tail0[pos] <= xt + tol) & (tail1[pos] <= yt + tol)
        for i in range(nT - 1):
            if not reach_hi[i]:
                continue
            js = np.arange(i + 1, nT)
            js = js[reach_lo[js]]
            if js.size == 0:
                continue
            widths = T[js] - T[i]
            f, t = _pair_rates(dist, T, pos, i, pv, c0[:, :deg], c1[:, :deg], js)
            d = np.hypot(f - xt, t - yt)
            acc = pi * t + (1 - pi) * (1 - f)
            pool.add(
                d, acc, widths[:, None], lip[None, :] / widths[:, None], np.full((1, 1), i), js[:, None],
                np.arange(1, len(ps) + 1)[None, :], tol,
            )

    chosen = pool.best(slack=tol)
    within = chosen is not None
    if chosen is None:
        _, i, j, k = pool.closest
        chosen = (i, j, k)
    rule = _rule_from_indices(family, T, ps, *chosen)
    point = achieved_rates(dist, rule)
    return GroupFit(rule, point, point.distance(target), within)


def _pair_rates(dist, T, pos, i, pv, c0, c1, js=None):
    """Expected (fpr, tpr) of every rule with t0 = T[i], t1 in T[js] (default T[i+1:]), p in ``pv``.

    Returns two arrays of shape (len(js), len(pv)).

    With prefix moments ``M[k, l] = sum_{s in support[lo:lo+l]} m(s) (s - t0)^k``
    the mass-weighted polynomial sums over [t0, tau) and [tau, t1) are
    differences of M, so each (t1, p) costs O(degree).
    """
    support = np.asarray(dist.support, dtype=float)
    tails = tail_masses(dist)
    deg = c0.shape[1]
    t0, lo = T[i], pos[i]
    js = np.arange(i + 1, T.size) if js is None else np.asarray(js)
    widths = T[js] - t0
    seg = support[lo:]
    powers = np.vstack([(seg - t0) ** k for k in range(deg)])
    jrel = pos[js] - lo
    tau = t0 + (1.0 - pv)[None, :] * widths[:, None]
    krel = np.searchsorted(seg, tau, side="left")  # first support point of segment 1
    w = (widths[:, None] ** -np.arange(deg)[None, :]).T[:, :, None]  # (deg, J, 1)
    out = []
    for y in (0, 1):
        m = np.asarray(dist.cond_mass[y], dtype=float)[lo:]
        M = np.concatenate([np.zeros((deg, 1)), np.cumsum(powers * m, axis=1)], axis=1)
        A = M[:, krel] * w
        B = M[:, jrel][:, :, None] * w
        r = tails[y][pos[js]][:, None] + np.einsum("kjp,pk->jp", A, c0) + np.einsum("kjp,pk->jp", B - A, c1)
        out.append(r)
    return out[0], out[1]


def _rule_from_indices(family: CurveFamily, T: np.ndarray, ps: Sequence[float], i: int, j: int, k: int) -> CurveParams:
    ext = np.concatenate([T, [-math.inf, math.inf]])
    if i == j:
        return CurveParams.single_threshold(family, float(ext[i]))
    return construct(family, float(T[i]), float(T[j]), float(ps[k - 1]))


def calibrate_group(
    dist: GroupDistribution, family: CurveFamily | str, target: OperatingPoint, grid: SearchGrid | None = None
) -> CurveParams:
    """Best rule for one group; warns if no grid triple is within tolerance of ``target``."""
    fit = fit_group(dist, family, target, grid)
    if not fit.within_tolerance:
        warnings.warn(
            f"group {dist.group!r}: closest rule misses the target by {fit.distance:.3g} "
            f"(tolerance {(grid or SearchGrid()).tolerance:.3g})",
            stacklevel=2,
        )
    return fit.rule


@dataclass(frozen=True)
class CalibrationResult:
    baseline: str
    target: OperatingPoint
    family: CurveFamily
    rules: Mapping[str, CurveParams]
    achieved: Mapping[str, OperatingPoint]
    metrics: Mapping[str, GroupMetrics]
    within_tolerance: Mapping[str, bool]
    tolerance: float
    score_range: tuple[float, float]
    max_eo_gap: float
    odds_report: OddsReport | None = None

    @property
    def groups(self) -> tuple[str, ...]:
        return tuple(self.rules)


class GroupCalibrationError(SmoothOddsError):
    def __init__(self, group: str, cause: Exception):
        self.group = group
        self.cause = cause
        super().__init__(f"group {group!r}: {cause}")


def assemble_result(
    ds: Dataset,
    family: CurveFamily,
    baseline: str,
    target: OperatingPoint,
    rules: Mapping[str, CurveParams],
    tolerance: float,
    dists: Mapping[str, GroupDistribution] | None = None,
) -> CalibrationResult:
    """Recompute achieved points and metrics from rules (shared by calibration and evaluation)."""
    dists = dists or {g: group_distribution(ds, g) for g in ds.groups}
    achieved = {g: achieved_rates(dists[g], rules[g]) for g in rules}
    metrics = {
        g: group_metrics(g, dists[g], rules[g], dists[baseline], rules[baseline], ds.score_range) for g in rules
    }
    within = {g: achieved[g].distance(target) <= tolerance + 1e-12 for g in rules}
    report = individual_odds_satisfied({g: m.odds_image for g, m in metrics.items()}) if len(rules) > 1 else None
    return CalibrationResult(
        baseline=baseline,
        target=target,
        family=family,
        rules=dict(rules),
        achieved=achieved,
        metrics=metrics,
        within_tolerance=within,
        tolerance=tolerance,
        score_range=ds.score_range,
        max_eo_gap=max_pairwise_eo_gap(dists, rules),
        odds_report=report,
    )


def calibrate_all(ds: Dataset, family: CurveFamily | str, grid: SearchGrid | None = None) -> CalibrationResult:
    """ROC curves, shared target, one rule per group, and metrics.

    The baseline group is searched over single thresholds first; it only falls
    back to a randomised rule when no single threshold is within tolerance
    (the target then sits strictly inside one of its hull edges).
    """
    family = CurveFamily.parse(family)
    grid = grid or SearchGrid()
    dists: dict[str, GroupDistribution] = {}
    for g in ds.groups:
        d = group_distribution(ds, g)
        try:
            d.require_both_classes("calibration")
        except SmoothOddsError as exc:
            raise GroupCalibrationError(g, exc) from exc
        dists[g] = d

    if len(dists) == 1:
        (g, d), = dists.items()
        t, _ = accuracy_optimal_threshold(d)
        rule = CurveParams.single_threshold(family, t)
        target = achieved_rates(d, rule)
        return assemble_result(ds, family, g, target, {g: rule}, grid.tolerance, dists)

    baseline, target = select_target({g: roc_curve(d) for g, d in dists.items()})
    rules: dict[str, CurveParams] = {}
    for g, d in dists.items():
        try:
            fit = None
            if g == baseline:
                fit = fit_group(d, family, target, grid, single_only=True)
                if not fit.within_tolerance:
                    fit = None
            if fit is None:
                fit = fit_group(d, family, target, grid)
        except SmoothOddsError as exc:
            raise GroupCalibrationError(g, exc) from exc
        if not fit.within_tolerance:
            warnings.warn(
                f"group {g!r}: closest rule misses the target by {fit.distance:.3g} (tolerance {grid.tolerance:.3g})",
                stacklevel=2,
            )
        rules[g] = fit.rule
    return assemble_result(ds, family, baseline, target, rules, grid.tolerance, dists)
