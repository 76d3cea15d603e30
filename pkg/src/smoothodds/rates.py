"""Expected (FPR, TPR) of a randomised rule under a group's score distributions."""

from __future__ import annotations

import numpy as np

from .curvelab import CurveParams, eval_phi
from .dataset import GroupDistribution
from .roc import OperatingPoint


def rate_pair(dist: GroupDistribution, cp: CurveParams) -> tuple[float, float]:
    """``(P(Yhat=1 | y=0), P(Yhat=1 | y=1))`` by exact summation over the support."""
    dist.require_both_classes("achieved rates")
    phi = np.asarray(eval_phi(cp, np.asarray(dist.support, dtype=float)), dtype=float)
    return float(phi @ dist.cond_mass[0]), float(phi @ dist.cond_mass[1])


def achieved_rates(dist: GroupDistribution, cp: CurveParams) -> OperatingPoint:
    fpr, tpr = rate_pair(dist, cp)
    return OperatingPoint(fpr, tpr)
