"""Run configuration: JSON document, CLI overrides, and run ids.

A config file is a flat-ish JSON object; every scalar can be overridden
from the command line. The run id is a short hash of the resolved config,
so outputs land in per-configuration directories and repeated runs never
silently overwrite a different experiment.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .biclustering import BcbofConfig
from .indicators import IndicatorSpec, default_indicator_specs
from .strategy import PsoConfig, StrategyParams

CONFIG_SCHEMA_VERSION = 1

DEFAULT_CONFIG = {
    "schema_version": CONFIG_SCHEMA_VERSION,
    "seed": 42,
    "output_dir": "out",
    "data": {
        "matrix_csv": None,
        "train_csv": None,
        "test_csv": None,
        "has_header": True,
        "label_column": 0,
        "normalize_matrix": True,
    },
    "bcbof": {
        "delta": 0.05,
        "eps": None,
        "min_pts": None,
        "factor_criterion": "kaiser",
        "linkage": "average",
        "column_num_clusters": None,
        "column_distance_threshold": None,
        "normalize_loadings": False,
        "varimax_tol": 1e-6,
        "varimax_max_iter": 100,
    },
    "indicators": None,  # null = the default 30-column set
    "labels": {
        "horizon": 5,
        "threshold_pct": 0.5,
        "window_offset": 0,
    },
    "fuzzy": {
        "width_floor": 0.02,
        "match_floor": 0.1,
    },
    "strategy": {
        "t_h": 0.0,
        "t_bt": 5,
        "t_bs": 3,
        "t_loss_pct": 10.0,
        "n_avg": 5,
        "fill": "close",
    },
    "pso": {
        "particles": 30,
        "iterations": 50,
        "inertia": 0.72,
        "cognitive": 1.49,
        "social": 1.49,
        "velocity_clamp": 0.2,
    },
}


class ConfigError(ValueError):
    """Malformed configuration (a usage problem, not a data problem)."""


def _merge(base: dict, override: dict, path="") -> dict:
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, path + key + ".")
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration for one CLI run."""

    raw: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_CONFIG)))

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        doc = {}
        if path is not None:
            try:
                doc = json.loads(Path(path).read_text())
            except FileNotFoundError:
                raise ConfigError(f"config file not found: {path}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
            version = doc.get("schema_version", CONFIG_SCHEMA_VERSION)
            if version != CONFIG_SCHEMA_VERSION:
                raise ConfigError(f"unsupported config schema version {version!r}")
        merged = _merge(DEFAULT_CONFIG, doc)
        if overrides:
            merged = _merge(merged, overrides)
        return cls(merged)

    def run_id(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    # ---- typed views -------------------------------------------------

    def bcbof_config(self) -> BcbofConfig:
        b = self.raw["bcbof"]
        try:
            return BcbofConfig(
                delta=float(b["delta"]),
                eps=None if b["eps"] is None else float(b["eps"]),
                min_pts=None if b["min_pts"] is None else int(b["min_pts"]),
                factor_criterion=b["factor_criterion"],
                linkage=b["linkage"],
                column_num_clusters=(None if b["column_num_clusters"] is None
                                     else int(b["column_num_clusters"])),
                column_distance_threshold=(None if b["column_distance_threshold"] is None
                                           else float(b["column_distance_threshold"])),
                normalize_loadings=bool(b["normalize_loadings"]),
                varimax_tol=float(b["varimax_tol"]),
                varimax_max_iter=int(b["varimax_max_iter"]),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def indicator_specs(self) -> list[IndicatorSpec]:
        raw = self.raw["indicators"]
        if raw is None:
            return default_indicator_specs()
        try:
            return [IndicatorSpec.from_list(item) for item in raw]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad indicator spec: {exc}") from None

    def strategy_params(self) -> StrategyParams:
        s = self.raw["strategy"]
        labels = self.raw["labels"]
        try:
            return StrategyParams(
                t_h=float(s["t_h"]),
                t_bt=int(s["t_bt"]),
                t_bs=int(s["t_bs"]),
                t_loss=float(s["t_loss_pct"]),
                n_avg=int(s["n_avg"]),
                n_label=int(labels["horizon"]),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def pso_config(self) -> PsoConfig:
        p = self.raw["pso"]
        return PsoConfig(
            particles=int(p["particles"]),
            iterations=int(p["iterations"]),
            inertia=float(p["inertia"]),
            cognitive=float(p["cognitive"]),
            social=float(p["social"]),
            velocity_clamp=float(p["velocity_clamp"]),
            seed=int(self.raw["seed"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, indent=2) + "\n"
