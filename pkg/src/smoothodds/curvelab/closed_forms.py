"""Reference closed-form segment coefficients on the normalised domain.

These are kept verbatim as they circulate in the literature, including two
known transcription errors, so that :func:`verify_constraints` can be run on
them: the linear lower segment is shifted (``psi0(0) != 0``) and the cubic
upper segment has a wrong constant and a wrong sign on ``x`` (``psi1(1) != 1``).
Curves built by :func:`construct` never use these; they solve the constraint
systems instead. Each function returns ``(seg0, seg1)`` ascending coefficients.
"""

from __future__ import annotations


def linear(p: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    q = 1.0 - p
    return (-p / q, p / q), (1.0 - q / p, q / p)


def linear_corrected(p: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Linear form with the lower segment anchored at 0: ``psi0(x) = p x / (1 - p)``."""
    q = 1.0 - p
    return (0.0, p / q), (1.0 - q / p, q / p)


def quadratic(p: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    p2 = p * p
    seg0 = (0.0, 0.0, p / (p - 1.0) ** 2)
    seg1 = ((p2 + p - 1.0) / p2, -2.0 * (p - 1.0) / p2, (p - 1.0) / p2)
    return seg0, seg1


def cubic(p: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    p3 = p**3
    seg0 = (0.0, 0.0, 3.0 * p / (p * p - 2.0 * p + 1.0), 2.0 * p / (p - 1.0) ** 3)
    seg1 = (
        (p3 + 3.0 * p * p - 3.0 * p + 2.0) / p3,
        6.0 * (p * p - 2.0 * p + 1.0) / p3,
        3.0 * (p * p - 3.0 * p + 2.0) / p3,
        2.0 * (p - 1.0) / p3,
    )
    return seg0, seg1


def quartic(p: float) -> tuple[float, ...]:
    return (0.0, 0.0, 30.0 * p - 12.0, -60.0 * p + 28.0, 30.0 * p - 15.0)
