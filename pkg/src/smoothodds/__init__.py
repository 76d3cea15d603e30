"""Equalized-odds post-processing with continuous, Lipschitz-bounded decision curves."""

from .calibrator import CalibrationResult, GroupFit, SearchGrid, calibrate_all, calibrate_group, fit_group
from .curvelab import CurveFamily, CurveParams, construct, eval_phi, lipschitz, verify_constraints
from .dataset import Dataset, GroupDistribution, ScoreRecord, group_distribution, load_csv, synthesize
from .decider import DecisionRecord, decide, decide_batch
from .errors import SmoothOddsError
from .fairmetrics import eo_gap, expected_accuracy, individual_odds_satisfied, odds_distance, odds_image
from .rates import achieved_rates
from .roc import OperatingPoint, RocCurve, roc_curve, select_target

__all__ = [
    "CalibrationResult",
    "CurveFamily",
    "CurveParams",
    "Dataset",
    "DecisionRecord",
    "GroupDistribution",
    "GroupFit",
    "OperatingPoint",
    "RocCurve",
    "ScoreRecord",
    "SearchGrid",
    "SmoothOddsError",
    "achieved_rates",
    "calibrate_all",
    "calibrate_group",
    "construct",
    "decide",
    "decide_batch",
    "eo_gap",
    "eval_phi",
    "expected_accuracy",
    "fit_group",
    "group_distribution",
    "individual_odds_satisfied",
    "lipschitz",
    "load_csv",
    "odds_distance",
    "odds_image",
    "roc_curve",
    "select_target",
    "synthesize",
    "verify_constraints",
]
