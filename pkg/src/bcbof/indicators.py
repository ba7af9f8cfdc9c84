"""OHLCV ingestion, technical indicators, and forward trend labeling.

The default indicator set produces 30 columns:

    WilliamsR 6/14/20, ROC 6/12/24/28, CCI 6/12/14/28, EMV 6/12/14/28,
    UOS (7,14,28), AR 26, BR 26, KDJ 9, SMA 6/10/12/24/30,
    RSI 6/12/18/24/30, MTM 6

Every indicator is a function of the trailing window only. Trend labels
(change rate against a banded threshold) look forward and are therefore
kept separate from the feature matrix.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass

import numpy as np

from .datamodel import DataMatrix, _normalize_label

INDICATOR_NAMES = ("WilliamsR", "ROC", "CCI", "EMV", "UOS", "AR", "BR",
                   "KDJ", "SMA", "RSI", "MTM", "RSV")

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True)
class OhlcvSeries:
    """Daily open/high/low/close/volume series with strictly increasing dates."""

    dates: list[str]
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("open", "high", "low", "close", "volume"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != len(self.dates):
                raise ValueError(f"{name} must be 1-D with one entry per date")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arrays[name] = arr
        dates = [_normalize_label(d) for d in self.dates]
        for d in dates:
            if not _ISO_DATE.match(d):
                raise ValueError(f"bad date {d!r}: expected YYYY-MM-DD or YYYY/MM/DD")
        if any(a >= b for a, b in zip(dates, dates[1:])):
            i = next(i for i, (a, b) in enumerate(zip(dates, dates[1:])) if a >= b)
            raise ValueError(f"dates not strictly increasing at position {i}: {dates[i]}")
        for name in ("open", "high", "low", "close"):
            if np.any(arrays[name] <= 0):
                raise ValueError(f"{name} prices must be positive")
        if np.any(arrays["volume"] < 0):
            raise ValueError("volume must be non-negative")
        body_high = np.maximum(arrays["open"], arrays["close"])
        body_low = np.minimum(arrays["open"], arrays["close"])
        if np.any(arrays["low"] > body_low + 1e-12) or np.any(arrays["high"] < body_high - 1e-12):
            i = int(np.argmax((arrays["low"] > body_low + 1e-12)
                              | (arrays["high"] < body_high - 1e-12)))
            raise ValueError(f"OHLC ordering violated on {dates[i]}")
        object.__setattr__(self, "dates", dates)
        for name, arr in arrays.items():
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.dates)

    def slice(self, start: int, stop: int) -> "OhlcvSeries":
        return OhlcvSeries(self.dates[start:stop], self.open[start:stop],
                           self.high[start:stop], self.low[start:stop],
                           self.close[start:stop], self.volume[start:stop])


def load_ohlcv_csv(path) -> OhlcvSeries:
    """Read a ``date,open,high,low,close,volume`` CSV into an OhlcvSeries."""
    expected = ["date", "open", "high", "low", "close", "volume"]
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != expected:
            raise ValueError(f"{path}: header must be {','.join(expected)}")
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    dates = []
    cols = {name: [] for name in expected[1:]}
    for r, row in enumerate(rows, start=2):
        if len(row) != 6:
            raise ValueError(f"{path}: row {r} has {len(row)} cells, expected 6")
        dates.append(row[0].strip())
        for name, cell in zip(expected[1:], row[1:]):
            try:
                cols[name].append(float(cell))
            except ValueError:
                raise ValueError(f"{path}: non-numeric {name} at row {r}: {cell!r}") from None
    return OhlcvSeries(dates, cols["open"], cols["high"], cols["low"],
                       cols["close"], cols["volume"])


def write_ohlcv_csv(series: OhlcvSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "open", "high", "low", "close", "volume"])
        for i, d in enumerate(series.dates):
            writer.writerow([d, repr(series.open[i]), repr(series.high[i]),
                             repr(series.low[i]), repr(series.close[i]),
                             repr(series.volume[i])])


@dataclass(frozen=True)
class IndicatorSpec:
    """An indicator name plus its period parameter(s)."""

    name: str
    periods: tuple[int, ...]

    def __post_init__(self):
        if self.name not in INDICATOR_NAMES:
            raise ValueError(f"unknown indicator {self.name!r}; known: {INDICATOR_NAMES}")
        periods = tuple(int(p) for p in self.periods)
        if any(p <= 0 for p in periods):
            raise ValueError(f"{self.name}: periods must be positive, got {periods}")
        if self.name == "UOS":
            if len(periods) != 3:
                raise ValueError("UOS takes exactly three periods")
        elif len(periods) != 1:
            raise ValueError(f"{self.name} takes exactly one period")
        object.__setattr__(self, "periods", periods)

    @property
    def label(self) -> str:
        return f"{self.name}_" + "_".join(str(p) for p in self.periods)

    def to_list(self) -> list:
        return [self.name, list(self.periods)]

    @classmethod
    def from_list(cls, item) -> "IndicatorSpec":
        name, periods = item
        return cls(name, tuple(periods))


def default_indicator_specs() -> list[IndicatorSpec]:
    """The stock 30-column indicator set."""
    specs = []
    for n in (6, 14, 20):
        specs.append(IndicatorSpec("WilliamsR", (n,)))
    for n in (6, 12, 24, 28):
        specs.append(IndicatorSpec("ROC", (n,)))
    for n in (6, 12, 14, 28):
        specs.append(IndicatorSpec("CCI", (n,)))
    for n in (6, 12, 14, 28):
        specs.append(IndicatorSpec("EMV", (n,)))
    specs.append(IndicatorSpec("UOS", (7, 14, 28)))
    specs.append(IndicatorSpec("AR", (26,)))
    specs.append(IndicatorSpec("BR", (26,)))
    specs.append(IndicatorSpec("KDJ", (9,)))
    for n in (6, 10, 12, 24, 30):
        specs.append(IndicatorSpec("SMA", (n,)))
    for n in (6, 12, 18, 24, 30):
        specs.append(IndicatorSpec("RSI", (n,)))
    specs.append(IndicatorSpec("MTM", (6,)))
    return specs


def _rolling_max(a: np.ndarray, n: int) -> np.ndarray:
    out = np.full(a.shape, np.nan)
    for i in range(n - 1, a.shape[0]):
        out[i] = a[i - n + 1:i + 1].max()
    return out


def _rolling_min(a: np.ndarray, n: int) -> np.ndarray:
    out = np.full(a.shape, np.nan)
    for i in range(n - 1, a.shape[0]):
        out[i] = a[i - n + 1:i + 1].min()
    return out


def _rolling_sum(a: np.ndarray, n: int) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(a)])
    out = np.full(a.shape, np.nan)
    out[n - 1:] = c[n:] - c[:-n]
    return out


def _rolling_mean(a: np.ndarray, n: int) -> np.ndarray:
    return _rolling_sum(a, n) / n


def _ratio_or_midpoint(num: np.ndarray, den: np.ndarray, context: str) -> np.ndarray:
    """num/den with zero-range denominators mapped to the 0.5 midpoint."""
    flat = den == 0.0
    if np.any(flat & ~np.isnan(den)):
        warnings.warn(f"{context}: zero-range window(s), using midpoint convention",
                      stacklevel=3)
    out = np.divide(num, den, out=np.full(num.shape, np.nan), where=den != 0.0)
    out[flat & ~np.isnan(num)] = 0.5
    return out


def _williams_r(s: OhlcvSeries, n: int) -> np.ndarray:
    hh = _rolling_max(s.high, n)
    ll = _rolling_min(s.low, n)
    ratio = _ratio_or_midpoint(hh - s.close, hh - ll, f"WilliamsR_{n}")
    return -100.0 * ratio


def _roc(s: OhlcvSeries, n: int) -> np.ndarray:
    out = np.full(len(s), np.nan)
    out[n:] = 100.0 * (s.close[n:] - s.close[:-n]) / s.close[:-n]
    return out


def _mtm(s: OhlcvSeries, n: int) -> np.ndarray:
    out = np.full(len(s), np.nan)
    out[n:] = s.close[n:] - s.close[:-n]
    return out


def _sma(s: OhlcvSeries, n: int) -> np.ndarray:
    return _rolling_mean(s.close, n)


def _rsi(s: OhlcvSeries, n: int) -> np.ndarray:
    delta = np.diff(s.close)
    gain = np.maximum(delta, 0.0)
    loss = np.maximum(-delta, 0.0)
    avg_gain = _rolling_mean(gain, n)
    avg_loss = _rolling_mean(loss, n)
    out = np.full(len(s), np.nan)
    for i in range(n, len(s)):
        g, l = avg_gain[i - 1], avg_loss[i - 1]
        if g == 0.0 and l == 0.0:
            out[i] = 50.0  # no movement at all in the window
        elif l == 0.0:
            out[i] = 100.0
        else:
            out[i] = 100.0 - 100.0 / (1.0 + g / l)
    return out


def _cci(s: OhlcvSeries, n: int) -> np.ndarray:
    tp = (s.high + s.low + s.close) / 3.0
    sma = _rolling_mean(tp, n)
    out = np.full(len(s), np.nan)
    for i in range(n - 1, len(s)):
        window = tp[i - n + 1:i + 1]
        md = np.mean(np.abs(window - sma[i]))
        out[i] = 0.0 if md == 0.0 else (tp[i] - sma[i]) / (0.015 * md)
    return out


def _emv(s: OhlcvSeries, n: int) -> np.ndarray:
    mid = (s.high + s.low) / 2.0
    move = np.diff(mid)
    box_range = (s.high - s.low)[1:]
    vol = s.volume[1:]
    term = np.where(vol > 0, move * box_range / np.where(vol > 0, vol, 1.0), 0.0)
    out = np.full(len(s), np.nan)
    out[n:] = _rolling_mean(term, n)[n - 1:]
    return out


def _uos(s: OhlcvSeries, periods: tuple[int, int, int]) -> np.ndarray:
    prev_close = s.close[:-1]
    true_low = np.minimum(s.low[1:], prev_close)
    true_high = np.maximum(s.high[1:], prev_close)
    bp = s.close[1:] - true_low
    tr = true_high - true_low
    n1, n2, n3 = periods
    ratios = []
    for n in periods:
        avg = _ratio_or_midpoint(_rolling_sum(bp, n), _rolling_sum(tr, n), f"UOS_{n}")
        ratios.append(avg)
    combined = 100.0 * (4.0 * ratios[0] + 2.0 * ratios[1] + ratios[2]) / 7.0
    out = np.full(len(s), np.nan)
    out[max(periods):] = combined[max(periods) - 1:]
    return out


def _ar(s: OhlcvSeries, n: int) -> np.ndarray:
    num = _rolling_sum(s.high - s.open, n)
    den = _rolling_sum(s.open - s.low, n)
    out = np.full(len(s), np.nan)
    for i in range(n - 1, len(s)):
        if den[i] == 0.0:
            warnings.warn(f"AR_{n}: flat window, using neutral 100", stacklevel=3)
            out[i] = 100.0
        else:
            out[i] = 100.0 * num[i] / den[i]
    return out


def _br(s: OhlcvSeries, n: int) -> np.ndarray:
    prev_close = s.close[:-1]
    up = np.maximum(0.0, s.high[1:] - prev_close)
    down = np.maximum(0.0, prev_close - s.low[1:])
    num = _rolling_sum(up, n)
    den = _rolling_sum(down, n)
    out = np.full(len(s), np.nan)
    for i in range(n, len(s)):
        nsum, dsum = num[i - 1], den[i - 1]
        if dsum == 0.0:
            warnings.warn(f"BR_{n}: flat window, using neutral 100", stacklevel=3)
            out[i] = 100.0
        else:
            out[i] = 100.0 * nsum / dsum
    return out


def _rsv(s: OhlcvSeries, n: int) -> np.ndarray:
    hh = _rolling_max(s.high, n)
    ll = _rolling_min(s.low, n)
    return 100.0 * _ratio_or_midpoint(s.close - ll, hh - ll, f"RSV_{n}")


def _kdj(s: OhlcvSeries, n: int) -> np.ndarray:
    """J line of the stochastic KDJ: K/D are 2/3-1/3 smoothings seeded at 50."""
    rsv = _rsv(s, n)
    out = np.full(len(s), np.nan)
    k = d = 50.0
    for i in range(n - 1, len(s)):
        k = (2.0 / 3.0) * k + (1.0 / 3.0) * rsv[i]
        d = (2.0 / 3.0) * d + (1.0 / 3.0) * k
        out[i] = 3.0 * k - 2.0 * d
    return out


_COMPUTE = {
    "WilliamsR": lambda s, p: _williams_r(s, p[0]),
    "ROC": lambda s, p: _roc(s, p[0]),
    "CCI": lambda s, p: _cci(s, p[0]),
    "EMV": lambda s, p: _emv(s, p[0]),
    "UOS": lambda s, p: _uos(s, p),
    "AR": lambda s, p: _ar(s, p[0]),
    "BR": lambda s, p: _br(s, p[0]),
    "KDJ": lambda s, p: _kdj(s, p[0]),
    "SMA": lambda s, p: _sma(s, p[0]),
    "RSI": lambda s, p: _rsi(s, p[0]),
    "MTM": lambda s, p: _mtm(s, p[0]),
    "RSV": lambda s, p: _rsv(s, p[0]),
}


def compute_indicators(series: OhlcvSeries, specs=None) -> DataMatrix:
    """Build the indicator matrix, one column per spec, dates as row labels.

    Leading rows where any indicator still lacks its lookback are dropped
    so the returned matrix is fully populated.
    """
    specs = list(specs) if specs is not None else default_indicator_specs()
    if not specs:
        raise ValueError("need at least one indicator spec")
    columns = []
    for spec in specs:
        columns.append(_COMPUTE[spec.name](series, spec.periods))
    stacked = np.column_stack(columns)
    valid = ~np.isnan(stacked).any(axis=1)
    first_valid = int(np.argmax(valid)) if valid.any() else len(series)
    if not valid.any() or not valid[first_valid:].all():
        raise ValueError(
            f"series of length {len(series)} is shorter than the indicator warm-up"
        )
    return DataMatrix(series.dates[first_valid:],
                      [spec.label for spec in specs],
                      stacked[first_valid:])


def acp(series: OhlcvSeries, i: int, n: int) -> float:
    """Average closing price of the n-day window starting at day i (inclusive)."""
    if n < 1:
        raise ValueError(f"window must be >= 1, got {n}")
    if i < 0 or i + n - 1 >= len(series):
        raise ValueError(
            f"window [{i}, {i + n - 1}] extends past the series end ({len(series)} days)"
        )
    return float(series.close[i:i + n].mean())


def change_rate(series: OhlcvSeries, i: int, n: int) -> float:
    """Percent change of the forward average close against day i's close."""
    a = acp(series, i, n)
    cp = series.close[i]
    return float((a - cp) / cp * 100.0)


def trend_level(cr: float, t: float) -> int:
    """Band a percent change rate into a trend level in [-3, 3].

    Bands are left-closed: t <= cr < 2t is level 1, and so on; cr at or
    beyond +-3t saturates at +-3.
    """
    if not t > 0:
        raise ValueError(f"threshold must be > 0, got {t}")
    if cr >= 3 * t:
        return 3
    if cr >= 2 * t:
        return 2
    if cr >= t:
        return 1
    if cr >= -t:
        return 0
    if cr >= -2 * t:
        return -1
    if cr >= -3 * t:
        return -2
    return -3


def rolling_mean_price(series: OhlcvSeries, i: int, n: int) -> float:
    """Average close of the n trading days ending at day i (inclusive)."""
    if n < 1:
        raise ValueError(f"window must be >= 1, got {n}")
    if i >= len(series):
        raise ValueError(f"day {i} out of range")
    if i < n - 1:
        raise ValueError(f"day {i} has fewer than {n} days of history")
    return float(series.close[i - n + 1:i + 1].mean())


@dataclass(frozen=True)
class TrendLabels:
    """Per-day forward-looking labels: change rate, trend level, validity.

    Days too close to the series end to complete the forward window carry
    ``valid=False`` (their cr is NaN and trend 0) and must be excluded
    from rule building.
    """

    cr: np.ndarray
    trend: np.ndarray
    valid: np.ndarray
    horizon: int
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "cr", np.asarray(self.cr, dtype=float))
        object.__setattr__(self, "trend", np.asarray(self.trend, dtype=int))
        object.__setattr__(self, "valid", np.asarray(self.valid, dtype=bool))


def trend_labels(series: OhlcvSeries, horizon: int = 5, threshold: float = 0.5,
                 window_offset: int = 0) -> TrendLabels:
    """Label each day with the banded forward change rate.

    ``window_offset`` = 0 starts the forward averaging window at the
    labeled day itself; 1 starts it the day after.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if window_offset not in (0, 1):
        raise ValueError("window_offset must be 0 or 1")
    n_days = len(series)
    cr = np.full(n_days, np.nan)
    trend = np.zeros(n_days, dtype=int)
    valid = np.zeros(n_days, dtype=bool)
    for i in range(n_days):
        start = i + window_offset
        if start + horizon - 1 >= n_days:
            continue
        a = float(series.close[start:start + horizon].mean())
        cp = series.close[i]
        cr[i] = (a - cp) / cp * 100.0
        trend[i] = trend_level(cr[i], threshold)
        valid[i] = True
    return TrendLabels(cr, trend, valid, horizon, threshold)
