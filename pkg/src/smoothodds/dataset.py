"""Score/group/label ingestion and per-group empirical distributions."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, EmptyClassError, ParseError, SchemaError, UnknownGroupError


@dataclass(frozen=True)
class ScoreRecord:
    score: float
    group: str
    label: int
    weight: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score!r}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if not (self.weight >= 0):
            raise ValueError(f"weight must be non-negative, got {self.weight!r}")


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of weighted (score, group, label) observations.

    ``groups`` keeps first-appearance order unless given explicitly.
    ``score_range`` defaults to the observed [min, max].
    """

    records: tuple[ScoreRecord, ...]
    groups: tuple[str, ...] = ()
    score_range: tuple[float, float] | None = None

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        if not records:
            raise ValueError("dataset has no records")
        groups = tuple(self.groups) or tuple(dict.fromkeys(r.group for r in records))
        object.__setattr__(self, "groups", groups)
        known = set(groups)
        for r in records:
            if r.group not in known:
                raise UnknownGroupError(f"record group {r.group!r} not in dataset groups {groups}")
        scores = [r.score for r in records]
        lo, hi = self.score_range if self.score_range is not None else (min(scores), max(scores))
        lo, hi = float(lo), float(hi)
        if lo > hi:
            raise ValueError(f"score_range {lo}..{hi} is reversed")
        if min(scores) < lo or max(scores) > hi:
            raise ValueError(f"observed scores [{min(scores)}, {max(scores)}] exceed score_range [{lo}, {hi}]")
        object.__setattr__(self, "score_range", (lo, hi))
        totals = dict.fromkeys(groups, 0.0)
        for r in records:
            totals[r.group] += r.weight
        empty = [g for g, w in totals.items() if w <= 0]
        if empty:
            raise ValueError(f"groups with zero total weight: {empty}")

    @cached_property
    def arrays(self) -> dict[str, np.ndarray]:
        """Column arrays (score, group index, label, weight), read-only."""
        index = {g: i for i, g in enumerate(self.groups)}
        cols = {
            "score": np.array([r.score for r in self.records], dtype=float),
            "group": np.array([index[r.group] for r in self.records], dtype=np.intp),
            "label": np.array([r.label for r in self.records], dtype=np.int8),
            "weight": np.array([r.weight for r in self.records], dtype=float),
        }
        for a in cols.values():
            a.flags.writeable = False
        return cols

    def total_weight(self, group: str | None = None) -> float:
        w = self.arrays["weight"]
        if group is None:
            return float(w.sum())
        return float(w[self.arrays["group"] == self._group_index(group)].sum())

    def _group_index(self, group: str) -> int:
        try:
            return self.groups.index(group)
        except ValueError:
            raise UnknownGroupError(f"unknown group {group!r}; known groups: {list(self.groups)}") from None


@dataclass(frozen=True, eq=False)
class GroupDistribution:
    """Weight-normalised conditional score distributions of one group.

    ``cond_mass[y]`` is P(R=r | Y=y, A=group) over ``support``; a label class
    with no weight is listed in ``empty_classes`` and its mass is all zeros.
    """

    group: str
    support: np.ndarray
    cond_mass: Mapping[int, np.ndarray]
    cond_cdf: Mapping[int, np.ndarray]
    base_rate: float
    empty_classes: frozenset[int] = field(default_factory=frozenset)
    class_weight: Mapping[int, float] = field(default_factory=dict)

    def require_both_classes(self, what: str = "this operation") -> None:
        if self.empty_classes:
            missing = ", ".join(f"y={y}" for y in sorted(self.empty_classes))
            raise EmptyClassError(f"group {self.group!r} has no weight for {missing}; {what} is undefined")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupDistribution):
            return NotImplemented
        return (
            np.array_equal(self.support, other.support)
            and all(np.array_equal(self.cond_mass[y], other.cond_mass[y]) for y in (0, 1))
            and self.base_rate == other.base_rate
            and self.empty_classes == other.empty_classes
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def group_distribution(ds: Dataset, group: str) -> GroupDistribution:
    gi = ds._group_index(group)
    cols = ds.arrays
    sel = cols["group"] == gi
    scores, labels, weights = cols["score"][sel], cols["label"][sel], cols["weight"][sel]
    support, inverse = np.unique(scores, return_inverse=True)
    mass, cdf, class_weight, empty = {}, {}, {}, set()
    for y in (0, 1):
        w = np.bincount(inverse, weights=np.where(labels == y, weights, 0.0), minlength=support.size)
        total = w.sum()
        class_weight[y] = float(total)
        if total > 0:
            m = w / total
        else:
            m = np.zeros(support.size)
            empty.add(y)
        mass[y] = _frozen(m)
        c = np.minimum(np.cumsum(m), 1.0)
        if total > 0:
            c[-1] = 1.0
        cdf[y] = _frozen(c)
    total = class_weight[0] + class_weight[1]
    return GroupDistribution(
        group=group,
        support=_frozen(support),
        cond_mass=mass,
        cond_cdf=cdf,
        base_rate=class_weight[1] / total,
        empty_classes=frozenset(empty),
        class_weight=class_weight,
    )


def conditional_probability_curve(dist: GroupDistribution) -> list[tuple[float, float]]:
    """P(Y=1 | R=r) at every support score, by Bayes' rule."""
    dist.require_both_classes("the conditional probability curve")
    pi = dist.base_rate
    num = pi * dist.cond_mass[1]
    den = num + (1.0 - pi) * dist.cond_mass[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        prob = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return [(float(r), float(min(1.0, max(0.0, v)))) for r, v in zip(dist.support, prob)]


# --- CSV -------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for :func:`load_csv`.

    Either ``label`` (optionally with ``weight``) or both ``pos`` and ``neg``
    count columns must be set. Aggregated rows expand into one positive and one
    negative record. With ``weight=None`` a column literally named ``weight``
    is still used when present, so files written by :func:`write_csv` load back
    with their weights.
    """

    score: str = "score"
    group: str = "group"
    label: str | None = "label"
    weight: str | None = None
    pos: str | None = None
    neg: str | None = None
    score_range: tuple[float, float] | None = None

    def __post_init__(self):
        aggregated = self.pos is not None or self.neg is not None
        if aggregated:
            if self.pos is None or self.neg is None:
                raise SchemaError("aggregated schema needs both pos= and neg= columns")
            if self.weight is not None:
                raise SchemaError("weight= cannot be combined with pos=/neg=")
            object.__setattr__(self, "label", None)
        elif self.label is None:
            raise SchemaError("schema needs label= or pos=/neg=")

    @property
    def aggregated(self) -> bool:
        return self.pos is not None

    @classmethod
    def parse(cls, text: str) -> "CsvSchema":
        """Parse ``score=COL,group=COL,label=COL[,weight=COL|pos=COL,neg=COL][,range=LO:HI]``."""
        fields: dict[str, Any] = {}
        allowed = {"score", "group", "label", "weight", "pos", "neg", "range"}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, sep, value = part.partition("=")
            key = key.strip()
            if not sep or key not in allowed or not value.strip():
                raise SchemaError(f"bad schema item {part!r}; expected one of {sorted(allowed)} as KEY=VALUE")
            fields[key] = value.strip()
        if "range" in fields:
            lo, sep, hi = fields.pop("range").partition(":")
            try:
                fields["score_range"] = (float(lo), float(hi))
            except ValueError:
                raise SchemaError("range must be LO:HI") from None
        if "pos" in fields or "neg" in fields:
            fields.setdefault("label", None)
        return cls(**fields)


def _parse_float(text: str, what: str, row: int, path: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"{what} {text!r} is not a number", row, path) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} {text!r} is not finite", row, path)
    return value


def _parse_weight(text: str, what: str, row: int, path: str) -> float:
    value = _parse_float(text, what, row, path)
    if value < 0:
        raise ParseError(f"{what} {value!r} is negative", row, path)
    return value


def load_csv(path: str | Path, schema: CsvSchema | None = None) -> Dataset:
    """Read a UTF-8 CSV with a header row. Row numbers in errors count the header as row 1."""
    schema = schema or CsvSchema()
    path = str(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = [schema.score, schema.group]
        needed += [schema.pos, schema.neg] if schema.aggregated else [schema.label]
        weight_col = schema.weight
        if weight_col is None and not schema.aggregated and "weight" in header:
            weight_col = "weight"
        if weight_col is not None:
            needed.append(weight_col)
        missing = [c for c in needed if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {missing}; header has {header}")
        records = []
        for row_no, row in enumerate(reader, start=2):
            score = _parse_float(row[schema.score], "score", row_no, path)
            group = row[schema.group]
            if schema.aggregated:
                n_pos = _parse_weight(row[schema.pos], "positive count", row_no, path)
                n_neg = _parse_weight(row[schema.neg], "negative count", row_no, path)
                records.append(ScoreRecord(score, group, 1, n_pos))
                records.append(ScoreRecord(score, group, 0, n_neg))
                continue
            raw = row[schema.label]
            try:
                label_f = float(raw)
            except (TypeError, ValueError):
                label_f = math.nan
            if label_f not in (0.0, 1.0):
                raise ParseError(f"label {raw!r} is not binary (0/1)", row_no, path)
            weight = 1.0
            if weight_col is not None:
                weight = _parse_weight(row[weight_col], "weight", row_no, path)
            records.append(ScoreRecord(score, group, int(label_f), weight))
    if not records:
        raise ParseError("no data rows", None, path)
    return Dataset(tuple(records), score_range=schema.score_range)


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write records as ``score,group,label,weight``; floats use shortest round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["score", "group", "label", "weight"])
        for r in ds.records:
            w.writerow([repr(float(r.score)), r.group, r.label, repr(float(r.weight))])


# --- synthetic generator ----------------------------------------------------


@dataclass(frozen=True)
class GroupSpec:
    name: str
    score_grid: tuple[float, ...]
    pos_weights: tuple[float, ...]
    neg_weights: tuple[float, ...]
    base_rate: float
    size: int = 10_000

    def digest(self) -> int:
        """Content hash of everything but the name; keys the group's random stream."""
        payload = json.dumps(
            [self.score_grid, self.pos_weights, self.neg_weights, self.base_rate, self.size],
            separators=(",", ":"),
        )
        return int.from_bytes(hashlib.sha256(payload.encode()).digest()[:16], "little")


def _grid(spec: Any, name: str) -> tuple[float, ...]:
    if isinstance(spec, Mapping):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"group {name!r}: score_grid needs numeric start/stop/step") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"group {name!r}: score_grid needs step > 0 and stop >= start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 12) for k in range(n))
    try:
        grid = tuple(float(v) for v in spec)
    except (TypeError, ValueError):
        raise ConfigError(f"group {name!r}: score_grid must be a list or start/stop/step mapping") from None
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"group {name!r}: score_grid must be non-empty and strictly increasing")
    return grid


def _weights(spec: Any, grid: Sequence[float], name: str, which: str) -> tuple[float, ...]:
    if isinstance(spec, Mapping) and "normal" in spec:
        mean, sd = float(spec["normal"]["mean"]), float(spec["normal"]["sd"])
        if sd <= 0:
            raise ConfigError(f"group {name!r}: {which} normal sd must be positive")
        x = np.asarray(grid)
        w = np.exp(-0.5 * ((x - mean) / sd) ** 2)
        return tuple(float(v) for v in w / w.sum())
    try:
        w = tuple(float(v) for v in spec)
    except (TypeError, ValueError):
        raise ConfigError(f"group {name!r}: {which} must be a list of weights or {{normal: {{mean, sd}}}}") from None
    if len(w) != len(grid):
        raise ConfigError(f"group {name!r}: {which} has {len(w)} entries, score_grid has {len(grid)}")
    if any(not math.isfinite(v) or v < 0 for v in w) or sum(w) <= 0:
        raise ConfigError(f"group {name!r}: {which} must be non-negative with positive sum")
    return w


def parse_generator_config(config: Mapping[str, Any]) -> list[GroupSpec]:
    """Validate a generator config mapping.

    Schema::

        {"groups": [{"name": str,
                     "score_grid": [..] | {"start": a, "stop": b, "step": h},
                     "pos_weights": [..] | {"normal": {"mean": m, "sd": s}},
                     "neg_weights": [..] | {"normal": {"mean": m, "sd": s}},
                     "base_rate": float in [0, 1],
                     "size": int > 0 (default 10000)}]}
    """
    groups = config.get("groups") if isinstance(config, Mapping) else None
    if not groups:
        raise ConfigError("generator config needs a non-empty 'groups' list")
    specs, seen = [], set()
    for i, g in enumerate(groups):
        name = str(g.get("name", f"group{i}"))
        if name in seen:
            raise ConfigError(f"duplicate group name {name!r}")
        seen.add(name)
        grid = _grid(g.get("score_grid"), name)
        try:
            base_rate = float(g["base_rate"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"group {name!r}: base_rate is required and must be a number") from None
        if not (0.0 <= base_rate <= 1.0):
            raise ConfigError(f"group {name!r}: base_rate {base_rate} outside [0, 1]")
        size = g.get("size", 10_000)
        if not isinstance(size, int) or size <= 0:
            raise ConfigError(f"group {name!r}: size must be a positive integer")
        specs.append(
            GroupSpec(
                name=name,
                score_grid=grid,
                pos_weights=_weights(g.get("pos_weights"), grid, name, "pos_weights"),
                neg_weights=_weights(g.get("neg_weights"), grid, name, "neg_weights"),
                base_rate=base_rate,
                size=size,
            )
        )
    return specs


def synthesize(config: Mapping[str, Any], seed: int) -> Dataset:
    """Sample an aggregated dataset from discretised class-conditional score distributions.

    Each group draws ``size`` individuals: the positive count is binomial in
    ``base_rate`` and scores are multinomial over ``score_grid``. A group's
    stream is keyed by the seed and the group's content hash, so two groups with
    identical specs produce identical samples and reordering groups changes
    nothing.
    """
    specs = parse_generator_config(config)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    records: list[ScoreRecord] = []
    lo, hi = math.inf, -math.inf
    for spec in specs:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, spec.digest()])))
        n_pos = int(rng.binomial(spec.size, spec.base_rate))
        pos = np.asarray(spec.pos_weights) / sum(spec.pos_weights)
        neg = np.asarray(spec.neg_weights) / sum(spec.neg_weights)
        pos_counts = rng.multinomial(n_pos, pos)
        neg_counts = rng.multinomial(spec.size - n_pos, neg)
        for score, n1, n0 in zip(spec.score_grid, pos_counts, neg_counts):
            if n1:
                records.append(ScoreRecord(score, spec.name, 1, float(n1)))
            if n0:
                records.append(ScoreRecord(score, spec.name, 0, float(n0)))
        lo, hi = min(lo, spec.score_grid[0]), max(hi, spec.score_grid[-1])
    return Dataset(tuple(records), groups=tuple(s.name for s in specs), score_range=(lo, hi))


def credit_like_config(size: int = 25_000, step: float = 0.5) -> dict[str, Any]:
    """Four-group configuration loosely shaped like a 0-100 credit-score population.

    Positive class = repays. Groups differ in score location, separation and
    base rate, but stay moderate enough that every curve family can reach the
    shared operating point (see :func:`separated_config` for a harder case).
    """
    return _normal_config(
        {
            "white": (60.0, 16.0, 36.0, 16.0, 0.72),
            "black": (50.0, 17.0, 30.0, 16.0, 0.40),
            "hispanic": (53.0, 17.0, 33.0, 16.0, 0.55),
            "asian": (62.0, 15.0, 37.0, 16.0, 0.76),
        },
        size,
        step,
    )


def separated_config(size: int = 25_000, step: float = 0.5) -> dict[str, Any]:
    """Like :func:`credit_like_config` but with strongly separated groups.

    The shared operating point then lies deep inside the best group's ROC
    hull, which some families cannot reach inside the 0-100 score range.
    """
    return _normal_config(
        {
            "white": (62.0, 18.0, 28.0, 20.0, 0.76),
            "black": (45.0, 20.0, 18.0, 16.0, 0.34),
            "hispanic": (50.0, 21.0, 26.0, 19.0, 0.52),
            "asian": (66.0, 17.0, 30.0, 21.0, 0.80),
        },
        size,
        step,
    )


def _normal_config(shapes: Mapping[str, tuple], size: int, step: float) -> dict[str, Any]:
    grid = {"start": 0.0, "stop": 100.0, "step": step}
    groups = []
    for name, (mp, sp, mn, sn, br) in shapes.items():
        groups.append(
            {
                "name": name,
                "score_grid": grid,
                "pos_weights": {"normal": {"mean": mp, "sd": sp}},
                "neg_weights": {"normal": {"mean": mn, "sd": sn}},
                "base_rate": br,
                "size": size,
            }
        )
    return {"groups": groups}


def load_generator_config(path: str | Path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None


def records_from_rows(rows: Iterable[tuple[float, str, int, float]]) -> tuple[ScoreRecord, ...]:
    return tuple(ScoreRecord(float(s), str(g), int(y), float(w)) for s, g, y, w in rows)
