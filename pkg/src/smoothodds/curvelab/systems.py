"""Constraint systems for the piece-wise polynomial families and a small dense solver.

All systems live on the normalised domain [0, 1] with the junction at
``x0 = 1 - p``. Unknowns are ascending polynomial coefficients, segment 0
first, then segment 1 (the quartic has a single segment).
"""

from __future__ import annotations

import enum
from fractions import Fraction
from dataclasses import dataclass

import numpy as np

from ..errors import NoSolutionError, NoSystemError


class CurveFamily(str, enum.Enum):
    FIXED = "fixed"
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    CUBIC = "cubic"
    QUARTIC = "quartic"

    @classmethod
    def parse(cls, value: "str | CurveFamily") -> "CurveFamily":
        if isinstance(value, CurveFamily):
            return value
        aliases = {"4th": "quartic", "4th-order": "quartic", "step": "fixed"}
        key = aliases.get(str(value).lower(), str(value).lower())
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown curve family {value!r}; choose from {[f.value for f in cls]}") from None

    @property
    def continuous(self) -> bool:
        return self is not CurveFamily.FIXED


# Single-segment families
_DEGREE = {CurveFamily.LINEAR: 1, CurveFamily.QUADRATIC: 2, CurveFamily.CUBIC: 3, CurveFamily.QUARTIC: 4}


@dataclass(frozen=True)
class ConstraintSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    labels: tuple[str, ...]
    family: CurveFamily | None = None
    p: float | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        b = np.array(self.rhs, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"constraint matrix must be square, got shape {m.shape}")
        if b.shape != (m.shape[0],) or len(self.labels) != m.shape[0]:
            raise ValueError("rhs and labels must have one entry per matrix row")
        m.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _value_row(x: float, degree: int) -> list[float]:
    return [x**k for k in range(degree + 1)]


def _slope_row(x: float, degree: int) -> list[float]:
    return [0] + [k * x ** (k - 1) for k in range(1, degree + 1)]


def _integral_row(a: float, b: float, degree: int) -> list[float]:
    return [(b ** (k + 1) - a ** (k + 1)) / Fraction(k + 1) for k in range(degree + 1)]


def _assemble(family: CurveFamily, p):
    """Rows, rhs and labels; ``p`` may be a float or a Fraction (exact arithmetic)."""
    x0 = 1 - p
    deg = _DEGREE[family]
    zero = [0] * (deg + 1)
    rows: list[list] = []
    rhs: list = []
    labels: list[str] = []

    def add(row: list[float], value: float, label: str) -> None:
        rows.append(row)
        rhs.append(value)
        labels.append(label)

    if family is CurveFamily.QUARTIC:
        add(_value_row(0, 4), 0, "psi(0)=0")
        add(_slope_row(0, 4), 0, "psi'(0)=0")
        add(_value_row(1, 4), 1, "psi(1)=1")
        add(_slope_row(1, 4), 0, "psi'(1)=0")
        add(_integral_row(0, 1, 4), p, "integral psi = p")
    elif family is CurveFamily.CUBIC:
        add(_value_row(0, 3) + zero, 0, "psi0(0)=0")
        add(_slope_row(0, 3) + zero, 0, "psi0'(0)=0")
        add(_value_row(x0, 3) + zero, p, "psi0(x0)=p")
        add(zero + _value_row(1, 3), 1, "psi1(1)=1")
        add(zero + _slope_row(1, 3), 0, "psi1'(1)=0")
        add(zero + _value_row(x0, 3), p, "psi1(x0)=p")
        add(_slope_row(x0, 3) + [-v for v in _slope_row(x0, 3)], 0, "psi0'(x0)=psi1'(x0)")
        add(_integral_row(0, x0, 3) + _integral_row(x0, 1, 3), p, "integral phi = p")
    else:
        add(_value_row(0, deg) + zero, 0, "psi0(0)=0")
        if family is CurveFamily.QUADRATIC:
            add(_slope_row(0, deg) + zero, 0, "psi0'(0)=0")
        add(_value_row(x0, deg) + zero, p, "psi0(x0)=p")
        add(zero + _value_row(1, deg), 1, "psi1(1)=1")
        if family is CurveFamily.QUADRATIC:
            add(zero + _slope_row(1, deg), 0, "psi1'(1)=0")
        add(zero + _value_row(x0, deg), p, "psi1(x0)=p")
    return rows, rhs, labels


def _check_args(family: CurveFamily | str, p: float) -> CurveFamily:
    family = CurveFamily.parse(family)
    if family is CurveFamily.FIXED:
        raise NoSystemError("fixed randomisation is a step rule; it has no constraint system")
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie strictly inside (0, 1) to build a system, got {p!r}")
    return family


def build_system(family: CurveFamily | str, p: float) -> ConstraintSystem:
    """Assemble the square linear system whose solution gives the curve coefficients.

    Linear and quadratic use per-segment value (and end-slope) constraints only;
    their integral preservation follows from the junction placement and is
    checked by :func:`~smoothodds.curvelab.verify.verify_constraints`.
    """
    family = _check_args(family, p)
    rows, rhs, labels = _assemble(family, float(p))
    return ConstraintSystem(np.array(rows, dtype=float), np.array(rhs, dtype=float), tuple(labels), family, p)


@dataclass(frozen=True)
class Solution:
    x: np.ndarray
    degenerate: bool
    residual: float


PIVOT_RTOL = 1e-12


def _gauss_partial_pivot(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Gaussian elimination with row partial pivoting; None if a pivot is negligible."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = b.size
    scale = np.abs(a).max()
    if scale == 0:
        return None
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) < PIVOT_RTOL * scale:
            return None
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= np.outer(factors, a[k, k:])
        b[k + 1 :] -= factors * b[k]
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1 :] @ x[k + 1 :]) / a[k, k]
    return x


def solve_system(system: ConstraintSystem) -> Solution:
    """Solve ``M x = b``.

    Falls back to the minimum-norm least-squares solution when elimination
    meets a pivot below ``1e-12`` relative to ``max|M|``; the result is then
    flagged ``degenerate``. Raises :class:`NoSolutionError` if the residual of
    that solution exceeds ``1e-9 (1 + max|b|)``.
    """
    m, b = system.matrix, system.rhs
    tol = 1e-9 * (1.0 + np.abs(b).max(initial=0.0))
    x = _gauss_partial_pivot(m, b)
    degenerate = x is None
    if degenerate:
        x = np.linalg.lstsq(m, b, rcond=None)[0]
    residual = float(np.abs(m @ x - b).max(initial=0.0))
    if residual > tol:
        raise NoSolutionError(f"linear system is inconsistent (residual {residual:.3e} > {tol:.1e})")
    return Solution(x=x, degenerate=degenerate, residual=residual)


def solve_exact(family: CurveFamily | str, p: float) -> np.ndarray | None:
    """Solve the system for ``p`` in rational arithmetic; None if it is singular.

    A float ``p`` is an exact rational, so the result is the exact solution
    rounded once to double. Near p = 1/2 the cubic system is close to singular
    and a floating-point solve leaves errors of order 1e-9 in the junction
    slope; the exact route does not.
    """
    family = _check_args(family, p)
    rows, rhs, _ = _assemble(family, Fraction(float(p)))
    a = [[Fraction(v) for v in row] + [Fraction(r)] for row, r in zip(rows, rhs)]
    n = len(a)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return None
        a[k], a[piv] = a[piv], a[k]
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                a[i] = [u - f * v for u, v in zip(a[i], a[k])]
    x = [Fraction(0)] * n
    for k in range(n - 1, -1, -1):
        x[k] = (a[k][n] - sum(a[k][j] * x[j] for j in range(k + 1, n))) / a[k][k]
    return np.array([float(v) for v in x])
