"""Trading rules, backtests, and PSO tuning of the trading threshold.

Single-position model over daily bars. Each day the defuzzified trend
forecast ybar drives three rules:

    buy   when flat:  ybar >= t_h,  close below the trailing average price,
                      and enough days since the previous trade
    sell  when long:  stop-loss first (loss rate >= t_loss, lag-exempt),
                      otherwise ybar < t_h, close above the entry price,
                      and enough days since the buy

Rule conjuncts always evaluate on same-day closes; the fill policy only
decides the executed price (same-day close by default, next day's open
with ``fill="next_open"``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .datamodel import DataMatrix
from .fuzzy import RuleBase, infer_series
from .indicators import OhlcvSeries

FILL_POLICIES = ("close", "next_open")


@dataclass(frozen=True)
class StrategyParams:
    """Thresholds and windows consumed by the trading rules.

    t_h : trading threshold on the defuzzified trend scale.
    t_bt : minimum days between a trade's sell and the next buy.
    t_bs : minimum days between a buy and its (non-stop-loss) sell.
    t_loss : stop-loss threshold, percent.
    n_avg : trailing window for the average-price entry filter.
    n_label : forward horizon the trend labels were built with.
    """

    t_h: float = 0.0
    t_bt: int = 5
    t_bs: int = 3
    t_loss: float = 10.0
    n_avg: int = 5
    n_label: int = 5

    def __post_init__(self):
        if self.t_bt < 0 or self.t_bs < 0:
            raise ValueError("trade lags must be >= 0")
        if not self.t_loss > 0:
            raise ValueError(f"t_loss must be > 0, got {self.t_loss}")
        if self.n_avg < 1 or self.n_label < 1:
            raise ValueError("windows must be >= 1")

    def to_dict(self) -> dict:
        return {"t_h": self.t_h, "t_bt": self.t_bt, "t_bs": self.t_bs,
                "t_loss": self.t_loss, "n_avg": self.n_avg, "n_label": self.n_label}

    @classmethod
    def from_dict(cls, d: dict) -> "StrategyParams":
        return cls(**{k: d[k] for k in ("t_h", "t_bt", "t_bs", "t_loss",
                                        "n_avg", "n_label")})


@dataclass(frozen=True)
class Signal:
    """One rule firing: what happened, on which day, and why.

    The audit fields capture every quantity the triggering rule compared,
    so a replay can re-verify the decision.
    """

    day: int
    date: str
    kind: str  # "buy" | "sell"
    price: float
    rule: str  # "rule1" | "rule2" | "rule3"
    ybar: float | None
    close: float
    pbar: float | None = None       # trailing average price (buys)
    bp: float | None = None         # open-position entry price (sells)
    lag: int | None = None          # days since previous trade (buys) / since buy (sells)
    loss_rate: float | None = None  # percent loss at the close (rule-3 sells)

    def to_dict(self) -> dict:
        return {
            "day": self.day, "date": self.date, "kind": self.kind,
            "price": self.price, "rule": self.rule, "ybar": self.ybar,
            "close": self.close, "pbar": self.pbar, "bp": self.bp,
            "lag": self.lag, "loss_rate": self.loss_rate,
        }


@dataclass(frozen=True)
class Trade:
    """A completed round trip."""

    buy_day: int
    buy_price: float
    sell_day: int
    sell_price: float
    reason: str  # "rule2" | "rule3_stoploss" | "end_of_test_forced"

    def __post_init__(self):
        if self.sell_day <= self.buy_day:
            raise ValueError("sell_day must be after buy_day")
        if self.buy_price <= 0 or self.sell_price <= 0:
            raise ValueError("trade prices must be positive")

    @property
    def return_pct(self) -> float:
        return (self.sell_price - self.buy_price) / self.buy_price * 100.0

    def to_dict(self) -> dict:
        return {"buy_day": self.buy_day, "buy_price": self.buy_price,
                "sell_day": self.sell_day, "sell_price": self.sell_price,
                "reason": self.reason, "return_pct": self.return_pct}


@dataclass(frozen=True)
class StrategyRun:
    """Signals and trades produced by one pass over a test period."""

    signals: list[Signal]
    trades: list[Trade]
    ybar: np.ndarray
    days: np.ndarray  # series day index per evaluated matrix row

    @property
    def completed_trades(self) -> list[Trade]:
        return [t for t in self.trades if t.reason != "end_of_test_forced"]


def _align_days(series: OhlcvSeries, x_norm: DataMatrix) -> np.ndarray:
    """Map indicator-matrix rows (date labels) onto series day indices."""
    index = {d: i for i, d in enumerate(series.dates)}
    days = np.empty(x_norm.n_rows, dtype=int)
    for r, label in enumerate(x_norm.row_labels):
        if label not in index:
            raise ValueError(f"indicator row date {label!r} not present in the price series")
        days[r] = index[label]
    if np.any(np.diff(days) <= 0):
        raise ValueError("indicator rows out of order relative to the price series")
    return days


def simulate_trading(series: OhlcvSeries, x_norm: DataMatrix, rule_base: RuleBase,
                     params: StrategyParams, ybar: np.ndarray | None = None,
                     fill: str = "close", force_close: bool = True) -> StrategyRun:
    """Run the three trading rules day by day over a test period.

    ``ybar`` may carry precomputed defuzzified values (NaN = no match) to
    avoid re-running inference when only thresholds change. With
    ``force_close`` an open position at the end of the period is
    liquidated at the final close and recorded as a forced trade; the
    forced exit appears in ``trades`` only, never in ``signals``.
    """
    if fill not in FILL_POLICIES:
        raise ValueError(f"fill must be one of {FILL_POLICIES}, got {fill!r}")
    days = _align_days(series, x_norm)
    if ybar is None:
        ybar = infer_series(rule_base, x_norm)
    ybar = np.asarray(ybar, dtype=float)
    if ybar.shape[0] != x_norm.n_rows:
        raise ValueError("ybar length does not match the indicator matrix")

    close = series.close
    signals: list[Signal] = []
    trades: list[Trade] = []
    position_open = False
    entry_price = 0.0
    entry_day = -1
    last_sell_day: int | None = None

    def execution(day: int) -> tuple[int, float]:
        if fill == "close" or day + 1 >= len(series):
            return day, float(close[day])
        return day + 1, float(series.open[day + 1])

    for r in range(x_norm.n_rows):
        i = int(days[r])
        y = None if np.isnan(ybar[r]) else float(ybar[r])
        today_close = float(close[i])

        if position_open:
            loss_rate = (entry_price - today_close) / entry_price * 100.0
            if loss_rate >= params.t_loss:
                exec_day, exec_price = execution(i)
                signals.append(Signal(i, series.dates[i], "sell", exec_price,
                                      "rule3", y, today_close, bp=entry_price,
                                      lag=i - entry_day, loss_rate=loss_rate))
                trades.append(Trade(entry_day, entry_price, exec_day, exec_price,
                                    "rule3_stoploss"))
                position_open = False
                last_sell_day = i
                continue
            if (y is not None and y < params.t_h and today_close > entry_price
                    and i - entry_day >= params.t_bs):
                exec_day, exec_price = execution(i)
                signals.append(Signal(i, series.dates[i], "sell", exec_price,
                                      "rule2", y, today_close, bp=entry_price,
                                      lag=i - entry_day))
                trades.append(Trade(entry_day, entry_price, exec_day, exec_price,
                                    "rule2"))
                position_open = False
                last_sell_day = i
            continue

        # flat: look for an entry
        if y is None or y < params.t_h:
            continue
        if i < params.n_avg - 1:
            continue
        pbar = float(close[i - params.n_avg + 1:i + 1].mean())
        if not today_close < pbar:
            continue
        lag = i - last_sell_day if last_sell_day is not None else None
        if lag is not None and lag < params.t_bt:
            continue
        exec_day, exec_price = execution(i)
        signals.append(Signal(i, series.dates[i], "buy", exec_price, "rule1",
                              y, today_close, pbar=pbar, lag=lag))
        position_open = True
        entry_price = exec_price
        entry_day = exec_day

    if position_open and force_close:
        final_day = int(days[-1])
        final_price = float(close[final_day])
        if final_day > entry_day:
            trades.append(Trade(entry_day, entry_price, final_day, final_price,
                                "end_of_test_forced"))
        # a buy filled on the very last day cannot be closed; it stays open

    return StrategyRun(signals, trades, ybar, days)


def generate_signals(series: OhlcvSeries, x_norm: DataMatrix, rule_base: RuleBase,
                     params: StrategyParams, fill: str = "close") -> list[Signal]:
    """Rule-driven buy/sell signals for a test period (no forced liquidation)."""
    return simulate_trading(series, x_norm, rule_base, params, fill=fill,
                            force_close=False).signals


def backtest_profit(trades) -> float:
    """Total percent return: sum over trades of (sell - buy) / buy * 100."""
    return float(sum(t.return_pct for t in trades))


def buy_and_hold_profit(series: OhlcvSeries) -> float:
    """Percent return of holding from the first to the last close."""
    if len(series) == 0:
        raise ValueError("empty series")
    first, last = float(series.close[0]), float(series.close[-1])
    return (last - first) / first * 100.0


@dataclass(frozen=True)
class PsoConfig:
    """Global-best PSO settings for the 1-D threshold search."""

    particles: int = 30
    iterations: int = 50
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    velocity_clamp: float = 0.2  # fraction of the search range
    seed: int = 42
    bounds: tuple[float, float] = (-3.0, 3.0)

    def to_dict(self) -> dict:
        return {"particles": self.particles, "iterations": self.iterations,
                "inertia": self.inertia, "cognitive": self.cognitive,
                "social": self.social, "velocity_clamp": self.velocity_clamp,
                "seed": self.seed, "bounds": list(self.bounds)}


def pso_optimize_threshold(series: OhlcvSeries, x_norm: DataMatrix,
                           rule_base: RuleBase, base_params: StrategyParams,
                           pso: PsoConfig | None = None) -> float:
    """Tune the trading threshold by maximizing training-period profit.

    Particles start on an even lattice across the bounds (deterministic
    coverage) with seeded random velocities; the objective is the total
    profit of a simulated run, forced end-of-period exit included. Flat
    objectives are reported with a warning. Fixed seeds give identical
    results across runs.
    """
    if not rule_base.rules:
        raise ValueError("rule base is empty")
    cfg = pso or PsoConfig()
    lo, hi = cfg.bounds
    span = hi - lo
    rng = np.random.default_rng(cfg.seed)
    ybar = infer_series(rule_base, x_norm)
    observed: set[float] = set()

    def objective(t_h: float) -> float:
        run = simulate_trading(series, x_norm, rule_base,
                               replace(base_params, t_h=float(t_h)), ybar=ybar)
        profit = backtest_profit(run.trades)
        if len(observed) < 2:
            observed.add(profit)
        return profit

    positions = np.linspace(lo, hi, cfg.particles)
    vmax = cfg.velocity_clamp * span
    velocities = rng.uniform(-vmax, vmax, cfg.particles)
    personal_best = positions.copy()
    personal_score = np.array([objective(x) for x in positions])
    best_idx = int(np.argmax(personal_score))
    global_best = float(personal_best[best_idx])
    global_score = float(personal_score[best_idx])

    for _ in range(cfg.iterations):
        r1 = rng.random(cfg.particles)
        r2 = rng.random(cfg.particles)
        velocities = (cfg.inertia * velocities
                      + cfg.cognitive * r1 * (personal_best - positions)
                      + cfg.social * r2 * (global_best - positions))
        np.clip(velocities, -vmax, vmax, out=velocities)
        positions = np.clip(positions + velocities, lo, hi)
        for k in range(cfg.particles):
            score = objective(positions[k])
            if score > personal_score[k]:
                personal_score[k] = score
                personal_best[k] = positions[k]
                if score > global_score:
                    global_score = score
                    global_best = float(positions[k])

    if len(observed) < 2:
        warnings.warn("objective flat: profit does not depend on the threshold "
                      "(rule base may never fire)", stacklevel=2)
    return global_best
