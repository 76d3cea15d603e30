"""JSON persistence of calibration results and fixed-precision number formatting.

Floats are written with 17 significant digits, which round-trips every IEEE
double exactly; infinities are written as the strings ``"inf"`` / ``"-inf"``
because JSON has no literal for them.

Document layout::

    {"format": "smoothodds.calibration/1",
     "family": str, "baseline": str,
     "target": {"fpr": x, "tpr": y},
     "tolerance": x, "score_range": [lo, hi], "max_eo_gap": x,
     "groups": {name: {"family", "t0", "t1", "p", "tau",
                       "seg0_coeffs": [...], "seg1_coeffs": [...],
                       "achieved": {"fpr", "tpr"}, "within_tolerance": bool,
                       "metrics": {"expected_accuracy", "eo_gap", "eo_gap_mean",
                                   "lipschitz", "odds_image": {"intervals", "points"}}}},
     "individual_odds": {"satisfied": bool, "pairs": [{"from", "to", "ok"}]} | null}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .curvelab import CurveFamily, CurveParams
from .errors import ConfigError
from .roc import OperatingPoint

FORMAT = "smoothodds.calibration/1"


def fmt_float(x: float, digits: int) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, f".{digits}g")


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        text = fmt_float(obj, 17)
        return text if math.isfinite(obj) else json.dumps(text)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    return _dump(obj, indent, 0) + "\n"


def _num(v: Any) -> float:
    if isinstance(v, str):
        if v in ("inf", "-inf", "nan"):
            return float(v)
        raise ConfigError(f"expected a number, got {v!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}")
    return float(v)


def _point(p: OperatingPoint) -> dict:
    return {"fpr": p.fpr, "tpr": p.tpr}


def rule_to_json(cp: CurveParams) -> dict:
    return {
        "family": cp.family.value,
        "t0": cp.t0,
        "t1": cp.t1,
        "p": cp.p,
        "tau": cp.tau,
        "seg0_coeffs": list(cp.seg0_coeffs),
        "seg1_coeffs": list(cp.seg1_coeffs),
    }


def rule_from_json(d: Mapping[str, Any]) -> CurveParams:
    try:
        return CurveParams(
            CurveFamily.parse(d["family"]),
            _num(d["t0"]),
            _num(d["t1"]),
            _num(d["p"]),
            tuple(_num(c) for c in d.get("seg0_coeffs", ())),
            tuple(_num(c) for c in d.get("seg1_coeffs", ())),
        )
    except KeyError as exc:
        raise ConfigError(f"rule is missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"invalid rule: {exc}") from None


def metrics_to_json(m) -> dict:
    return {
        "expected_accuracy": m.expected_accuracy,
        "eo_gap": m.eo_gap,
        "eo_gap_mean": m.eo_gap_mean,
        "lipschitz": m.lipschitz,
        "odds_image": m.odds_image.to_json(),
    }


def result_to_json(result) -> dict:
    groups = {}
    for g, cp in result.rules.items():
        entry = rule_to_json(cp)
        entry["achieved"] = _point(result.achieved[g])
        entry["within_tolerance"] = bool(result.within_tolerance[g])
        entry["metrics"] = metrics_to_json(result.metrics[g])
        groups[g] = entry
    report = None
    if result.odds_report is not None:
        report = {
            "satisfied": result.odds_report.satisfied,
            "pairs": [{"from": a, "to": b, "ok": ok} for (a, b), ok in result.odds_report.pairs.items()],
        }
    return {
        "format": FORMAT,
        "family": result.family.value,
        "baseline": result.baseline,
        "target": _point(result.target),
        "tolerance": result.tolerance,
        "score_range": list(result.score_range),
        "max_eo_gap": result.max_eo_gap,
        "groups": groups,
        "individual_odds": report,
    }


@dataclass(frozen=True)
class StoredCalibration:
    """A calibration document as read back: rules are authoritative, metrics are only what was written."""

    family: CurveFamily
    baseline: str
    target: OperatingPoint
    tolerance: float
    rules: Mapping[str, CurveParams]
    embedded_metrics: Mapping[str, Mapping[str, Any]]
    embedded_max_eo_gap: float | None


def result_from_json(doc: Mapping[str, Any]) -> StoredCalibration:
    if not isinstance(doc, Mapping) or doc.get("format") != FORMAT:
        raise ConfigError(f"not a calibration document (expected format {FORMAT!r})")
    try:
        groups = doc["groups"]
        rules = {g: rule_from_json(entry) for g, entry in groups.items()}
        target = OperatingPoint(_num(doc["target"]["fpr"]), _num(doc["target"]["tpr"]))
        baseline = str(doc["baseline"])
        family = CurveFamily.parse(doc["family"])
        tolerance = _num(doc.get("tolerance", 5e-4))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"calibration document is missing or has malformed field: {exc}") from None
    if baseline not in rules:
        raise ConfigError(f"baseline {baseline!r} has no rule in the document")
    max_eo = doc.get("max_eo_gap")
    return StoredCalibration(
        family=family,
        baseline=baseline,
        target=target,
        tolerance=tolerance,
        rules=rules,
        embedded_metrics={g: dict(entry.get("metrics") or {}) for g, entry in groups.items()},
        embedded_max_eo_gap=None if max_eo is None else _num(max_eo),
    )


def save_result(result, path: str | Path) -> None:
    Path(path).write_text(dumps(result_to_json(result)), encoding="utf-8")


def load_result(path: str | Path) -> StoredCalibration:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return result_from_json(doc)
