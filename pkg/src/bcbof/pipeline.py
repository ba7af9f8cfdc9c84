"""End-to-end training and backtesting of the biclustering trading system.

Training: indicators -> min-max scaling -> biclustering of the labeled
training rows -> one fuzzy rule per bicluster -> PSO search for the
trading threshold. The fitted artifacts (rule base, scaling extremes,
strategy parameters) form a model bundle that can be saved, reloaded, and
applied to unseen price data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .biclustering import BcbofConfig, Bicluster, bcbof_full
from .datamodel import NormalizationParams, apply_normalization, minmax_normalize
from .fuzzy import DEFAULT_MATCH_FLOOR, DEFAULT_WIDTH_FLOOR, RuleBase, build_rule_base, infer_series
from .indicators import (IndicatorSpec, OhlcvSeries, TrendLabels, compute_indicators,
                         default_indicator_specs, trend_labels)
from .strategy import (PsoConfig, StrategyParams, StrategyRun, backtest_profit,
                       buy_and_hold_profit, pso_optimize_threshold, simulate_trading)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TrainedModel:
    """Everything needed to trade unseen data: rules, scaling, thresholds."""

    rule_base: RuleBase
    normalization: NormalizationParams
    params: StrategyParams
    indicator_specs: list[IndicatorSpec]
    biclusters: list[Bicluster]
    trend_threshold: float = 0.5
    label_window_offset: int = 0

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "rules.json").write_text(self.rule_base.to_json() + "\n")
        norm = {"schema_version": SCHEMA_VERSION, **self.normalization.to_dict()}
        (directory / "norm.json").write_text(
            json.dumps(norm, sort_keys=True, indent=2) + "\n")
        params = {
            "schema_version": SCHEMA_VERSION,
            "strategy": self.params.to_dict(),
            "indicators": [s.to_list() for s in self.indicator_specs],
            "biclusters": [b.to_dict() for b in self.biclusters],
            "trend_threshold": self.trend_threshold,
            "label_window_offset": self.label_window_offset,
        }
        (directory / "params.json").write_text(
            json.dumps(params, sort_keys=True, indent=2) + "\n")
        return directory

    @classmethod
    def load(cls, directory) -> "TrainedModel":
        directory = Path(directory)
        try:
            rules = json.loads((directory / "rules.json").read_text())
            norm = json.loads((directory / "norm.json").read_text())
            params = json.loads((directory / "params.json").read_text())
        except FileNotFoundError as exc:
            raise ValueError(f"model bundle incomplete: {exc.filename} missing") from exc
        except json.JSONDecodeError as exc:
            raise ValueError(f"model bundle corrupted: {exc}") from exc
        for name, doc in (("norm.json", norm), ("params.json", params)):
            version = doc.get("schema_version")
            if version != SCHEMA_VERSION:
                raise ValueError(f"{name}: unsupported schema version {version!r}")
        for key in ("strategy", "indicators"):
            if key not in params:
                raise ValueError(f"params.json: missing field {key!r}")
        return cls(
            rule_base=RuleBase.from_dict(rules),
            normalization=NormalizationParams.from_dict(norm),
            params=StrategyParams.from_dict(params["strategy"]),
            indicator_specs=[IndicatorSpec.from_list(s) for s in params["indicators"]],
            biclusters=[Bicluster.from_dict(b) for b in params.get("biclusters", [])],
            trend_threshold=float(params.get("trend_threshold", 0.5)),
            label_window_offset=int(params.get("label_window_offset", 0)),
        )


def train_model(series: OhlcvSeries,
                indicator_specs=None,
                bcbof_config: BcbofConfig | None = None,
                strategy_params: StrategyParams | None = None,
                pso_config: PsoConfig | None = None,
                trend_threshold: float = 0.5,
                label_window_offset: int = 0,
                width_floor: float = DEFAULT_WIDTH_FLOOR,
                match_floor: float = DEFAULT_MATCH_FLOOR,
                optimize_threshold: bool = True) -> TrainedModel:
    """Fit the full system on a training price series.

    Biclustering runs on the rows that carry a valid forward trend label
    (the last ``n_label - 1`` rows cannot be labeled and are dropped), so
    every rule's consequent is grounded in observed trends.

    Raises ValueError("no technical patterns ...") when biclustering finds
    nothing to turn into rules.
    """
    specs = list(indicator_specs) if indicator_specs is not None else default_indicator_specs()
    base = strategy_params or StrategyParams()
    matrix = compute_indicators(series, specs)
    normalized, norm_params = minmax_normalize(matrix)

    labels = trend_labels(series, horizon=base.n_label, threshold=trend_threshold,
                          window_offset=label_window_offset)
    day_of_row = {d: i for i, d in enumerate(series.dates)}
    row_days = np.array([day_of_row[d] for d in normalized.row_labels])
    row_valid = labels.valid[row_days]
    labeled_rows = np.flatnonzero(row_valid)
    if labeled_rows.size < 2:
        raise ValueError("training window too short: no labeled rows after warm-up")
    train_matrix = normalized.select(rows=labeled_rows.tolist())

    result = bcbof_full(train_matrix, bcbof_config or BcbofConfig())
    if not result.biclusters:
        raise ValueError("no technical patterns: biclustering produced no blocks; "
                         "relax delta or the density settings")

    # trend labels aligned to the biclustered matrix's rows
    sub_days = row_days[labeled_rows]
    aligned = TrendLabels(labels.cr[sub_days], labels.trend[sub_days],
                          labels.valid[sub_days], labels.horizon, labels.threshold)
    rule_base = build_rule_base(train_matrix, result.biclusters, aligned,
                                width_floor=width_floor, match_floor=match_floor)

    params = base
    if optimize_threshold:
        t_h = pso_optimize_threshold(series, normalized, rule_base, base,
                                     pso_config or PsoConfig())
        params = StrategyParams(t_h=t_h, t_bt=base.t_bt, t_bs=base.t_bs,
                                t_loss=base.t_loss, n_avg=base.n_avg,
                                n_label=base.n_label)

    return TrainedModel(rule_base=rule_base, normalization=norm_params,
                        params=params, indicator_specs=specs,
                        biclusters=result.biclusters,
                        trend_threshold=trend_threshold,
                        label_window_offset=label_window_offset)


@dataclass(frozen=True)
class BacktestReport:
    """Outcome of applying a trained model to a test period."""

    run: StrategyRun
    profit_pct: float              # completed rule-driven trades only
    profit_with_forced_pct: float  # including a forced end-of-period exit
    buy_hold_pct: float
    rule_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "profit_pct": self.profit_pct,
            "profit_with_forced_pct": self.profit_with_forced_pct,
            "buy_hold_pct": self.buy_hold_pct,
            "n_trades": len(self.run.trades),
            "n_completed_trades": len(self.run.completed_trades),
            "rule_counts": dict(self.rule_counts),
            "trades": [t.to_dict() for t in self.run.trades],
            "signals": [s.to_dict() for s in self.run.signals],
        }


def run_backtest(model: TrainedModel, series: OhlcvSeries,
                 fill: str = "close") -> BacktestReport:
    """Apply a trained model to unseen prices and summarize the outcome.

    Indicators are scaled with the stored training extremes (clamped), so
    the test period never leaks its own statistics into the features.
    """
    matrix = compute_indicators(series, model.indicator_specs)
    normalized = apply_normalization(matrix, model.normalization)
    run = simulate_trading(series, normalized, model.rule_base, model.params,
                           fill=fill, force_close=True)
    counts = {"rule1_buys": 0, "rule2_sells": 0, "rule3_sells": 0, "forced_exits": 0}
    for s in run.signals:
        if s.rule == "rule1":
            counts["rule1_buys"] += 1
        elif s.rule == "rule2":
            counts["rule2_sells"] += 1
        elif s.rule == "rule3":
            counts["rule3_sells"] += 1
    counts["forced_exits"] = sum(1 for t in run.trades
                                 if t.reason == "end_of_test_forced")
    return BacktestReport(
        run=run,
        profit_pct=backtest_profit(run.completed_trades),
        profit_with_forced_pct=backtest_profit(run.trades),
        buy_hold_pct=buy_and_hold_profit(series),
        rule_counts=counts,
    )


def predict_trend(model: TrainedModel, series: OhlcvSeries) -> tuple[list[str], np.ndarray]:
    """Defuzzified trend forecast per test day (NaN where no rule matches)."""
    matrix = compute_indicators(series, model.indicator_specs)
    normalized = apply_normalization(matrix, model.normalization)
    return list(normalized.row_labels), infer_series(model.rule_base, normalized)


class SSOBCTrader(BaseEstimator):
    """Sklearn-style front end: fit on a training series, predict/backtest on test data.

    ``fit`` expects an :class:`OhlcvSeries`; ``predict`` returns the
    defuzzified trend forecast per usable test day, and ``backtest``
    produces the full trading report.
    """

    def __init__(self, delta=0.05, eps=None, min_pts=None,
                 factor_criterion="kaiser", linkage="average",
                 trend_threshold=0.5, label_horizon=5, label_window_offset=0,
                 width_floor=DEFAULT_WIDTH_FLOOR, match_floor=DEFAULT_MATCH_FLOOR,
                 t_bt=5, t_bs=3, t_loss=10.0, n_avg=5, fill="close", seed=42):
        self.delta = delta
        self.eps = eps
        self.min_pts = min_pts
        self.factor_criterion = factor_criterion
        self.linkage = linkage
        self.trend_threshold = trend_threshold
        self.label_horizon = label_horizon
        self.label_window_offset = label_window_offset
        self.width_floor = width_floor
        self.match_floor = match_floor
        self.t_bt = t_bt
        self.t_bs = t_bs
        self.t_loss = t_loss
        self.n_avg = n_avg
        self.fill = fill
        self.seed = seed

    def fit(self, series: OhlcvSeries, y=None, indicator_specs=None):
        base = StrategyParams(t_bt=self.t_bt, t_bs=self.t_bs, t_loss=self.t_loss,
                              n_avg=self.n_avg, n_label=self.label_horizon)
        cfg = BcbofConfig(delta=self.delta, eps=self.eps, min_pts=self.min_pts,
                          factor_criterion=self.factor_criterion, linkage=self.linkage)
        self.model_ = train_model(
            series, indicator_specs=indicator_specs, bcbof_config=cfg,
            strategy_params=base, pso_config=PsoConfig(seed=self.seed),
            trend_threshold=self.trend_threshold,
            label_window_offset=self.label_window_offset,
            width_floor=self.width_floor, match_floor=self.match_floor)
        return self

    def predict(self, series: OhlcvSeries) -> np.ndarray:
        _, ybar = predict_trend(self.model_, series)
        return ybar

    def signals(self, series: OhlcvSeries):
        return self.backtest(series).run.signals

    def backtest(self, series: OhlcvSeries) -> BacktestReport:
        return run_backtest(self.model_, series, fill=self.fill)
