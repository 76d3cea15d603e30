"""Decision-probability curves between two thresholds.

A rule maps a score ``r`` to the probability of a positive decision::

    phi(r) = 0                      r < t0
             psi0((r - t0) / dT)    t0 <= r < tau
             psi1((r - t0) / dT)    tau <= r < t1
             1                      r >= t1

with ``dT = t1 - t0`` and junction ``tau = t0 + (1 - p) dT``. The junction
placement makes the area under every family equal to ``p dT``, the area under
the fixed-randomisation step, so all families share the same average
acceptance probability between the thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from ..errors import MonotonicityError, NonDifferentiableError, OrderingError
from . import closed_forms
from .systems import CurveFamily, solve_exact

QUARTIC_P_RANGE = (0.4, 0.6)
# Offset used to approach p = 1/2, where the cubic system loses rank.
_CUBIC_LIMIT_STEP = 1e-6


def tau(t0: float, t1: float, p: float) -> float:
    """Junction score ``t0 + (1 - p)(t1 - t0)``."""
    if t0 > t1:
        raise OrderingError(f"thresholds out of order: t0={t0} > t1={t1}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if t0 == t1:
        return t0
    return t0 + (1.0 - p) * (t1 - t0)


@dataclass(frozen=True)
class CurveParams:
    """A calibrated decision rule.

    Coefficients are ascending and apply on the normalised domain
    ``x = (r - t0) / (t1 - t0)``. A single deterministic threshold is stored as
    ``t0 == t1`` with ``p == 0`` and no coefficients.
    """

    family: CurveFamily
    t0: float
    t1: float
    p: float
    seg0_coeffs: tuple[float, ...] = ()
    seg1_coeffs: tuple[float, ...] = ()
    tau: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "family", CurveFamily.parse(self.family))
        object.__setattr__(self, "seg0_coeffs", tuple(float(c) for c in self.seg0_coeffs))
        object.__setattr__(self, "seg1_coeffs", tuple(float(c) for c in self.seg1_coeffs))
        if math.isnan(self.t0) or math.isnan(self.t1):
            raise ValueError("thresholds must not be NaN")
        object.__setattr__(self, "tau", tau(self.t0, self.t1, self.p))
        if not self.is_single_threshold and not (math.isfinite(self.t0) and math.isfinite(self.t1)):
            raise ValueError("a randomised rule needs finite thresholds")

    @property
    def is_single_threshold(self) -> bool:
        return self.t0 == self.t1

    @property
    def width(self) -> float:
        return self.t1 - self.t0

    @property
    def junction(self) -> float:
        """Junction on the normalised domain, ``1 - p``."""
        return 1.0 - self.p

    @classmethod
    def single_threshold(cls, family: CurveFamily | str, t: float) -> "CurveParams":
        return cls(CurveFamily.parse(family), float(t), float(t), 0.0)


@lru_cache(maxsize=8192)
def _solved(family: CurveFamily, p: float) -> tuple[tuple[float, ...], tuple[float, ...]] | None:
    sol = solve_exact(family, p)
    if sol is None:
        return None
    if family is CurveFamily.QUARTIC:
        c = tuple(float(v) for v in sol)
        return c, c
    half = sol.size // 2
    return tuple(float(v) for v in sol[:half]), tuple(float(v) for v in sol[half:])


def normalized_coefficients(family: CurveFamily | str, p: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Segment coefficients on [0, 1] for ``0 < p < 1``."""
    family = CurveFamily.parse(family)
    if family is CurveFamily.FIXED:
        return (float(p),), (float(p),)
    solved = _solved(family, float(p))
    if solved is None:
        # Only the cubic at p = 1/2 is singular: average the two nearby
        # solutions, which picks the member of the solution family continuous in p.
        lo0, lo1 = _solved(family, p - _CUBIC_LIMIT_STEP)
        hi0, hi1 = _solved(family, p + _CUBIC_LIMIT_STEP)
        avg = lambda a, b: tuple((u + v) / 2.0 for u, v in zip(a, b))  # noqa: E731
        return avg(lo0, hi0), avg(lo1, hi1)
    seg0, seg1 = solved
    if family is CurveFamily.QUARTIC:
        ref = closed_forms.quartic(p)
        if max(abs(a - b) for a, b in zip(seg0, ref)) > 1e-9:
            raise ArithmeticError(f"quartic solve disagrees with its closed form at p={p}")
    return seg0, seg1


def construct(family: CurveFamily | str, t0: float, t1: float, p: float) -> CurveParams:
    """Build a rule; degenerate inputs (``t0 == t1`` or ``p`` in {0, 1}) give a single threshold."""
    family = CurveFamily.parse(family)
    t0, t1, p = float(t0), float(t1), float(p)
    if t0 > t1:
        raise OrderingError(f"thresholds out of order: t0={t0} > t1={t1}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if t0 == t1:
        return CurveParams.single_threshold(family, t0)
    if p == 0.0:
        return CurveParams.single_threshold(family, t1)
    if p == 1.0:
        return CurveParams.single_threshold(family, t0)
    if family is CurveFamily.QUARTIC and not (QUARTIC_P_RANGE[0] <= p <= QUARTIC_P_RANGE[1]):
        raise MonotonicityError(f"quartic curve is not monotone for p={p}; need p in [0.4, 0.6]")
    seg0, seg1 = normalized_coefficients(family, p)
    return CurveParams(family, t0, t1, p, seg0, seg1)


def _as_output(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def eval_phi(cp: CurveParams, r):
    """Probability of a positive decision at score(s) ``r``."""
    r_arr = np.asarray(r, dtype=float)
    out = np.where(r_arr >= cp.t1, 1.0, 0.0)
    if not cp.is_single_threshold:
        inside = (r_arr >= cp.t0) & (r_arr < cp.t1)
        x = (r_arr - cp.t0) / cp.width
        val = np.where(r_arr >= cp.tau, P.polyval(x, cp.seg1_coeffs), P.polyval(x, cp.seg0_coeffs))
        out = np.where(inside, np.clip(val, 0.0, 1.0), out)
    return _as_output(out, r_arr.ndim == 0)


def derivative(cp: CurveParams, r, side: str = "right"):
    """d phi / d r.

    At ``t0`` and ``t1`` the one-sided value from inside the interval is
    returned; at the junction ``side`` picks the segment (``"right"`` follows
    the ``[tau, t1)`` convention).
    """
    if cp.family is CurveFamily.FIXED or cp.is_single_threshold:
        raise NonDifferentiableError("a step rule has no derivative at its thresholds")
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    r_arr = np.asarray(r, dtype=float)
    x = (r_arr - cp.t0) / cp.width
    inside = (r_arr >= cp.t0) & (r_arr <= cp.t1)
    upper = r_arr >= cp.tau if side == "right" else r_arr > cp.tau
    d0 = P.polyval(x, P.polyder(cp.seg0_coeffs))
    d1 = P.polyval(x, P.polyder(cp.seg1_coeffs))
    out = np.where(inside, np.where(upper, d1, d0) / cp.width, 0.0)
    return _as_output(out, r_arr.ndim == 0)


def _max_abs_slope(coeffs: tuple[float, ...], lo: float, hi: float) -> float:
    """max |psi'(x)| on [lo, hi] from endpoints and the real roots of psi''."""
    d1 = P.polyder(coeffs)
    if d1.size == 0:
        return 0.0
    points = [lo, hi]
    d2 = np.trim_zeros(P.polyder(d1), "b")
    if d2.size > 1:
        for root in P.polyroots(d2):
            if abs(root.imag) < 1e-12 and lo < root.real < hi:
                points.append(float(root.real))
    return float(np.max(np.abs(P.polyval(np.array(points), d1))))


def quartic_inflection(p: float) -> float:
    """Interior root of psi'' for the quartic; the steepest point of the curve."""
    if abs(30.0 * p - 15.0) < 1e-12:
        return 0.5
    return -(7.0 - 15.0 * p + math.sqrt(75.0 * p * p - 75.0 * p + 19.0)) / (30.0 * p - 15.0)


def normalized_lipschitz(cp: CurveParams) -> float:
    """max |psi'| on the normalised domain (so ``lipschitz = this / dT``)."""
    if cp.family is CurveFamily.FIXED or cp.is_single_threshold:
        return math.inf
    p, q = cp.p, 1.0 - cp.p
    if cp.family is CurveFamily.LINEAR:
        return max(p, q) / min(p, q)
    if cp.family is CurveFamily.QUARTIC:
        x_star = quartic_inflection(p)
        if not (0.0 <= x_star <= 1.0):
            return _max_abs_slope(cp.seg0_coeffs, 0.0, 1.0)
        return abs(float(P.polyval(x_star, P.polyder(cp.seg0_coeffs))))
    x0 = cp.junction
    return max(_max_abs_slope(cp.seg0_coeffs, 0.0, x0), _max_abs_slope(cp.seg1_coeffs, x0, 1.0))


def lipschitz(cp: CurveParams) -> float:
    """Smallest L with |phi(r1) - phi(r2)| <= L |r1 - r2|; infinite for step rules."""
    k = normalized_lipschitz(cp)
    return k if math.isinf(k) else k / cp.width


def _segment_integral(coeffs: tuple[float, ...], lo: float, hi: float) -> float:
    if not coeffs:
        return 0.0
    anti = P.polyint(coeffs)
    return float(P.polyval(hi, anti) - P.polyval(lo, anti))


def normalized_area(cp: CurveParams) -> float:
    """Integral of the two segments over [0, 1] (exact antiderivative)."""
    if cp.is_single_threshold:
        return 0.0
    x0 = cp.junction
    return _segment_integral(cp.seg0_coeffs, 0.0, x0) + _segment_integral(cp.seg1_coeffs, x0, 1.0)


def area(cp: CurveParams) -> float:
    """Integral of phi over [t0, t1] in score units."""
    return 0.0 if cp.is_single_threshold else normalized_area(cp) * cp.width
