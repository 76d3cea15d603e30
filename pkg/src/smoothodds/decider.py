"""Bernoulli decisions from calibrated rules with a counter-based random stream.

Draw ``i`` under seed ``s`` is the i-th 64-bit output of ``numpy.random.Philox``
keyed by ``s`` (counter starting at zero). Philox emits four words per counter
value, so draw ``i`` lives in block ``i // 4`` at lane ``i % 4`` and can be
produced without generating the draws before it. The word becomes a uniform
``u = (word >> 11) * 2**-53`` and the outcome is ``u < phi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .curvelab import CurveParams, eval_phi
from .dataset import Dataset, ScoreRecord
from .errors import MissingRuleError

_LANES = 4
_TO_UNIT = 2.0**-53


@dataclass(frozen=True)
class DecisionRecord:
    record: ScoreRecord
    probability: float
    outcome: int
    draw_index: int


def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not (0 <= seed < 2**128):
        raise ValueError(f"seed must be an integer in [0, 2**128), got {seed!r}")
    return int(seed)


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniforms for draw indices ``start .. start + count - 1``."""
    seed = _check_seed(seed)
    if start < 0 or count < 0:
        raise ValueError("draw indices must be non-negative")
    if count == 0:
        return np.empty(0)
    first_block = start // _LANES
    offset = start - first_block * _LANES
    n_words = offset + count
    n_words += (-n_words) % _LANES
    words = np.random.Philox(key=seed, counter=first_block).random_raw(n_words)
    return (words[offset : offset + count] >> np.uint64(11)).astype(float) * _TO_UNIT


def uniform_at(seed: int, index: int) -> float:
    return float(uniforms(seed, index, 1)[0])


def _rules_of(result) -> Mapping[str, CurveParams]:
    return result.rules if hasattr(result, "rules") else result


def _rule_for(result, group: str) -> CurveParams:
    rules = _rules_of(result)
    try:
        return rules[group]
    except KeyError:
        raise MissingRuleError(f"no calibrated rule for group {group!r}; rules exist for {sorted(rules)}") from None


def decide(result, record: ScoreRecord, seed: int, index: int) -> DecisionRecord:
    """One decision for ``record`` using draw ``index`` of the stream keyed by ``seed``.

    ``result`` is a CalibrationResult or any mapping group -> CurveParams.
    """
    if index < 0:
        raise ValueError("draw index must be non-negative")
    rule = _rule_for(result, record.group)
    prob = float(eval_phi(rule, record.score))
    outcome = int(uniform_at(seed, index) < prob)
    return DecisionRecord(record, prob, outcome, int(index))


def _draw_counts(ds: Dataset) -> np.ndarray:
    w = ds.arrays["weight"]
    counts = np.rint(w)
    bad = np.nonzero(np.abs(w - counts) > 1e-9)[0]
    if bad.size:
        r = ds.records[int(bad[0])]
        raise ValueError(
            f"record {int(bad[0])} (group {r.group!r}, score {r.score}) has fractional weight {r.weight}; "
            "decisions need integral weights"
        )
    return counts.astype(np.int64)


def decide_arrays(result, ds: Dataset, seed: int, start: int = 0) -> dict[str, np.ndarray]:
    """Vectorised :func:`decide_batch`.

    Record ``k`` with weight ``w`` expands to ``w`` draws with consecutive
    indices, in record order. Returns arrays ``record`` (index into
    ``ds.records``), ``probability``, ``outcome`` and ``draw_index``.
    """
    counts = _draw_counts(ds)
    cols = ds.arrays
    prob = np.zeros(len(ds.records))
    for gi in np.unique(cols["group"][counts > 0]):
        sel = cols["group"] == gi
        prob[sel] = eval_phi(_rule_for(result, ds.groups[gi]), cols["score"][sel])
    rec = np.repeat(np.arange(len(ds.records)), counts)
    n = rec.size
    u = uniforms(seed, start, n)
    p = prob[rec]
    return {
        "record": rec,
        "probability": p,
        "outcome": (u < p).astype(np.int8),
        "draw_index": np.arange(start, start + n, dtype=np.int64),
    }


def decide_batch(result, ds: Dataset, seed: int) -> list[DecisionRecord]:
    """Decisions for every record (weights expanded to that many draws), in stable record order."""
    a = decide_arrays(result, ds, seed)
    recs = ds.records
    return [
        DecisionRecord(recs[k], float(p), int(o), int(i))
        for k, p, o, i in zip(a["record"], a["probability"], a["outcome"], a["draw_index"])
    ]
