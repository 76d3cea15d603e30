"""Check a rule against the boundary, junction, area and monotonicity constraints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .curves import CurveParams, normalized_area
from .systems import CurveFamily

TOL = 1e-9
SLOPE_FLOOR = -1e-10
GRID_POINTS = 10_000


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[Check, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self) -> str:
        lines = [f"{'ok ' if c.passed else 'FAIL'} {c.name:<24} {c.residual:.3e}" for c in self.checks]
        return "\n".join(lines)


def _min_slope(coeffs: tuple[float, ...], lo: float, hi: float) -> float:
    d1 = P.polyder(coeffs)
    if d1.size == 0 or hi <= lo:
        return 0.0
    xs = [np.linspace(lo, hi, GRID_POINTS)]
    d2 = np.trim_zeros(P.polyder(d1), "b")
    if d2.size > 1:
        roots = P.polyroots(d2)
        real = roots[(np.abs(roots.imag) < 1e-12) & (roots.real > lo) & (roots.real < hi)].real
        xs.append(real)
    return float(np.min(P.polyval(np.concatenate(xs), d1)))


def verify_constraints(cp: CurveParams, tol: float = TOL) -> VerificationReport:
    """Evaluate every constraint on the normalised domain; failures are reported, not raised."""
    checks: list[Check] = []

    def add(name: str, residual: float, passed: bool | None = None) -> None:
        residual = float(abs(residual))
        checks.append(Check(name, residual <= tol if passed is None else passed, residual))

    if cp.is_single_threshold:
        add("area = p*dT", 0.0)
        return VerificationReport(tuple(checks))

    s0, s1, x0 = cp.seg0_coeffs, cp.seg1_coeffs, cp.junction
    v = lambda c, x: float(P.polyval(x, c))  # noqa: E731
    d = lambda c, x: float(P.polyval(x, P.polyder(c))) if len(c) > 1 else 0.0  # noqa: E731

    add("phi(t0) = 0", v(s0, 0.0))
    add("phi(t1) = 1", v(s1, 1.0) - 1.0)
    add("junction continuity", v(s0, x0) - v(s1, x0))
    add("area = p*dT", normalized_area(cp) - cp.p)
    lowest = min(_min_slope(s0, 0.0, x0), _min_slope(s1, x0, 1.0))
    add("monotone", min(lowest, 0.0), passed=lowest >= SLOPE_FLOOR)

    fam = cp.family
    if fam in (CurveFamily.LINEAR, CurveFamily.QUADRATIC, CurveFamily.CUBIC):
        add("junction value = p", v(s0, x0) - cp.p)
    if fam in (CurveFamily.QUADRATIC, CurveFamily.CUBIC, CurveFamily.QUARTIC):
        add("phi'(t0) = 0", d(s0, 0.0))
        add("phi'(t1) = 0", d(s1, 1.0))
    if fam is CurveFamily.CUBIC:
        add("junction slope match", d(s0, x0) - d(s1, x0))
    return VerificationReport(tuple(checks))
