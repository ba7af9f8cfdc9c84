"""Fuzzy rules from biclusters, and inference with weighted-average defuzzification.

Each bicluster plus the trend labels of its trading days becomes one
IF-THEN rule: Gaussian antecedent sets centered on the bicluster's column
means, and a Gaussian consequent set centered on the mean trend level.
Inference multiplies antecedent memberships (product t-norm) and averages
the consequent centers of the fired rules, weighted by firing strength.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_matrix

DEFAULT_WIDTH_FLOOR = 0.02
DEFAULT_MATCH_FLOOR = 0.1


@dataclass(frozen=True)
class FuzzySet:
    """Gaussian membership exp(-(v - center)^2 / (2 width^2))."""

    center: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"width must be > 0, got {self.width}")

    def membership(self, value: float) -> float:
        z = (value - self.center) / self.width
        return math.exp(-0.5 * z * z)


@dataclass(frozen=True)
class FuzzyRule:
    """Antecedent sets keyed by column index, one consequent set over trend."""

    antecedent: dict[int, FuzzySet]
    consequent: FuzzySet
    provenance: int

    def __post_init__(self):
        if not self.antecedent:
            raise ValueError("antecedent must cover at least one column")
        object.__setattr__(self, "antecedent",
                           {int(k): v for k, v in sorted(self.antecedent.items())})

    def to_dict(self) -> dict:
        return {
            "antecedent": {str(k): {"center": s.center, "width": s.width}
                           for k, s in self.antecedent.items()},
            "consequent": {"center": self.consequent.center, "width": self.consequent.width},
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FuzzyRule":
        return cls(
            {int(k): FuzzySet(v["center"], v["width"])
             for k, v in d["antecedent"].items()},
            FuzzySet(d["consequent"]["center"], d["consequent"]["width"]),
            int(d["provenance"]),
        )


@dataclass(frozen=True)
class RuleBase:
    """Ordered rule collection with the minimum firing strength that counts as a match."""

    rules: list[FuzzyRule]
    match_floor: float = DEFAULT_MATCH_FLOOR

    def __post_init__(self):
        if not 0.0 <= self.match_floor < 1.0:
            raise ValueError(f"match_floor must be in [0, 1), got {self.match_floor}")
        object.__setattr__(self, "rules",
                           sorted(self.rules, key=lambda r: r.provenance))

    def __len__(self) -> int:
        return len(self.rules)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "match_floor": self.match_floor,
            "rules": [r.to_dict() for r in self.rules],
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        kwargs.setdefault("indent", 2)
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "RuleBase":
        version = d.get("schema_version", 1)
        if int(version) != 1:
            raise ValueError(f"unsupported rule-base schema version {version}")
        return cls([FuzzyRule.from_dict(r) for r in d["rules"]],
                   float(d.get("match_floor", DEFAULT_MATCH_FLOOR)))


def pattern_to_rule(x_norm, bicluster, trends, width_floor: float = DEFAULT_WIDTH_FLOOR,
                    provenance: int = 0) -> FuzzyRule:
    """Fuzzify one bicluster into an IF-THEN rule.

    Antecedent: per bicluster column, a Gaussian centered on the column
    mean over the bicluster's rows, width = that column's standard
    deviation floored at ``width_floor``. Consequent: a Gaussian over the
    trend scale centered on the mean trend level of the bicluster's days.

    Rows without a valid trend label are ignored; a bicluster with no
    validly labeled rows is an error.
    """
    values = as_float_matrix(x_norm)
    rows = np.asarray(bicluster.row_indices, dtype=int)
    cols = np.asarray(bicluster.col_indices, dtype=int)
    keep = rows[trends.valid[rows]]
    if keep.size == 0:
        raise ValueError(
            f"bicluster {provenance}: no rows with valid trend labels; "
            "cannot build a rule"
        )
    block = values[np.ix_(keep, cols)]
    centers = block.mean(axis=0)
    widths = np.maximum(block.std(axis=0), width_floor)
    antecedent = {int(c): FuzzySet(float(mu), float(w))
                  for c, mu, w in zip(cols, centers, widths)}
    levels = trends.trend[keep].astype(float)
    consequent = FuzzySet(float(levels.mean()),
                          float(max(levels.std(), width_floor)))
    return FuzzyRule(antecedent, consequent, provenance)


def build_rule_base(x_norm, biclusters, trends,
                    width_floor: float = DEFAULT_WIDTH_FLOOR,
                    match_floor: float = DEFAULT_MATCH_FLOOR) -> RuleBase:
    """One rule per bicluster, numbered in input order."""
    rules = [pattern_to_rule(x_norm, bc, trends, width_floor, provenance=i)
             for i, bc in enumerate(biclusters)]
    return RuleBase(rules, match_floor)


def firing_strength(rule: FuzzyRule, input_row) -> float:
    """Product of the rule's antecedent memberships at the input values."""
    row = np.asarray(input_row, dtype=float)
    strength = 1.0
    for col, fs in rule.antecedent.items():
        if col >= row.shape[0]:
            raise ValueError(f"input row has no column {col} required by the rule")
        value = row[col]
        if not np.isfinite(value):
            raise ValueError(f"input value for column {col} is not finite")
        strength *= fs.membership(float(value))
    return strength


def infer(rule_base: RuleBase, input_row) -> float | None:
    """Defuzzified output: firing-strength-weighted mean of consequent centers.

    Only rules whose firing strength reaches the rule base's match floor
    participate; returns None when no rule matches.
    """
    if not rule_base.rules:
        raise ValueError("rule base is empty")
    weights = []
    centers = []
    for rule in rule_base.rules:
        w = firing_strength(rule, input_row)
        if w >= rule_base.match_floor:
            weights.append(w)
            centers.append(rule.consequent.center)
    if not weights:
        return None
    weights = np.asarray(weights)
    centers = np.asarray(centers)
    return float(np.sum(weights * centers) / np.sum(weights))


def infer_series(rule_base: RuleBase, x_norm) -> np.ndarray:
    """Row-wise :func:`infer` over a matrix; NaN marks no-match days."""
    values = as_float_matrix(x_norm)
    out = np.full(values.shape[0], np.nan)
    for i in range(values.shape[0]):
        y = infer(rule_base, values[i])
        if y is not None:
            out[i] = y
    return out
