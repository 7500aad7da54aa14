"""Price files, normalized linear returns, windowing and observation weights.

Price files are delimited text: a header ``date<TAB>T1<TAB>...<TAB>Tn``
followed by one ISO-dated row per observation. Comma-delimited files are
accepted too; the delimiter is detected from the header row. Return files
use the same layout with ``period_end`` as the first header field.
"""
from __future__ import annotations

import csv
import io
import re
import sys
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True)
class PricePanel:
    """Adjusted closing prices, one row per date and one column per ticker."""

    dates: tuple[date, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float, copy=True)
        if prices.ndim != 2:
            raise ValidationError("prices must be a 2-d matrix")
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if prices.shape != (len(self.dates), len(self.tickers)):
            raise ValidationError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if len(set(self.tickers)) != len(self.tickers):
            raise ValidationError("duplicate ticker in header")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValidationError("dates are not strictly increasing")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise ValidationError("prices must be finite and strictly positive")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    @property
    def n(self) -> int:
        return len(self.tickers)

    def select(self, tickers: Sequence[str]) -> "PricePanel":
        idx = _ticker_indices(self.tickers, tickers)
        return PricePanel(self.dates, tuple(tickers), self.prices[:, idx])

    def row(self, on: date | str) -> np.ndarray:
        """Prices on a given date."""
        if isinstance(on, str):
            on = date.fromisoformat(on)
        try:
            return np.array(self.prices[self.dates.index(on)])
        except ValueError:
            raise ValidationError(f"date {on} is not in the panel") from None


@dataclass(frozen=True)
class ReturnPanel:
    """M x n periodic returns with observation weights and periods per unit time.

    ``weights`` may be left as ``None``, meaning uniform weights 1/M.
    Weights are always stored normalized to sum to one.
    """

    returns: np.ndarray
    tickers: tuple[str, ...]
    weights: np.ndarray | None = None
    rho: float = 1.0
    periods: tuple[date, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        R = np.array(self.returns, dtype=float, copy=True)
        if R.ndim == 1:
            R = R.reshape(-1, 1)
        if R.ndim != 2 or R.shape[0] < 1 or R.shape[1] < 1:
            raise ValidationError("returns must be a non-empty M x n matrix")
        if not np.all(np.isfinite(R)):
            raise ValidationError("returns contain non-finite values")
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if len(self.tickers) != R.shape[1]:
            raise ValidationError(f"{len(self.tickers)} tickers for {R.shape[1]} return columns")
        if len(set(self.tickers)) != len(self.tickers):
            raise ValidationError("duplicate ticker")
        if self.periods is not None:
            object.__setattr__(self, "periods", tuple(self.periods))
            if len(self.periods) != R.shape[0]:
                raise ValidationError("period labels do not match the number of return rows")
        if not np.isfinite(self.rho) or self.rho < 1:
            raise ValidationError(f"rho must be 1 or greater, got {self.rho}")
        R.setflags(write=False)
        object.__setattr__(self, "returns", R)
        object.__setattr__(self, "rho", float(self.rho))
        if self.weights is not None:
            w = _normalized_weights(self.weights, R.shape[0])
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def M(self) -> int:
        return self.returns.shape[0]

    @property
    def n(self) -> int:
        return self.returns.shape[1]

    def omega(self) -> np.ndarray:
        """Normalized weight vector, uniform when no weights were set."""
        if self.weights is None:
            return np.full(self.M, 1.0 / self.M)
        return np.array(self.weights)

    def with_weights(self, weights, rho: float | None = None) -> "ReturnPanel":
        return replace(self, weights=weights, rho=self.rho if rho is None else rho)

    def select(self, tickers: Sequence[str]) -> "ReturnPanel":
        """Restrict the panel to a subset of tickers, in the given order."""
        idx = _ticker_indices(self.tickers, tickers)
        return replace(self, returns=self.returns[:, idx], tickers=tuple(tickers))


def _normalized_weights(weights, M: int) -> np.ndarray:
    w = np.array(weights, dtype=float).ravel()
    if w.shape[0] != M:
        raise ValidationError(f"weights must have length M = {M}, got {w.shape[0]}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValidationError("weights must be positive")
    return w / w.sum()


def _ticker_indices(available: Sequence[str], wanted: Sequence[str]) -> list[int]:
    lookup = {t: i for i, t in enumerate(available)}
    missing = [t for t in wanted if t not in lookup]
    if missing:
        raise ValidationError(f"unknown ticker(s): {', '.join(missing)}")
    if len(set(wanted)) != len(wanted):
        raise ValidationError("duplicate ticker in selection")
    return [lookup[t] for t in wanted]


# -- parsing -----------------------------------------------------------------

def _detect_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def _parse_table(text: str, first_field: str, delimiter: str | None):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValidationError("empty input")
    delim = delimiter or _detect_delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delim))
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0].lower() != first_field:
        raise ValidationError(f"header must start with '{first_field}' followed by tickers")
    tickers = header[1:]
    if any(not t for t in tickers):
        raise ValidationError("empty ticker name in header")
    if len(set(tickers)) != len(tickers):
        raise ValidationError("duplicate ticker in header")
    if len(rows) < 2:
        raise ValidationError("empty panel: header without data rows")
    dates, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"line {lineno}: expected {len(header)} fields, found {len(row)}"
            )
        stamp = row[0].strip()
        if not _ISO_DATE.match(stamp):
            raise ValidationError(f"line {lineno}: date {stamp!r} is not YYYY-MM-DD")
        try:
            dates.append(date.fromisoformat(stamp))
            values.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    return dates, tickers, np.array(values, dtype=float)


def parse_prices(text: str, delimiter: str | None = None) -> PricePanel:
    """Parse a delimited price file into a :class:`PricePanel`."""
    dates, tickers, prices = _parse_table(text, "date", delimiter)
    if not np.all(np.isfinite(prices)):
        raise ValidationError("missing or non-finite price")
    if np.any(prices <= 0):
        raise ValidationError("non-positive price")
    for a, b in zip(dates, dates[1:]):
        if b <= a:
            raise ValidationError(f"non-increasing dates: {a} followed by {b}")
    return PricePanel(tuple(dates), tuple(tickers), prices)


def parse_returns(text: str, delimiter: str | None = None) -> ReturnPanel:
    """Parse a returns export (``period_end`` header) into a weightless panel."""
    dates, tickers, R = _parse_table(text, "period_end", delimiter)
    for a, b in zip(dates, dates[1:]):
        if b <= a:
            raise ValidationError(f"non-increasing dates: {a} followed by {b}")
    return ReturnPanel(R, tuple(tickers), periods=tuple(dates))


def parse_weight_column(text: str) -> np.ndarray:
    """Parse a single-column weights file with header ``weight``."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].lower() != "weight":
        raise ValidationError("weights file must have the header 'weight'")
    try:
        return np.array([float(v) for v in lines[1:]], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"bad weight value: {exc}") from None


def read_text(path: str | Path) -> str:
    """Read a file, with ``-`` meaning standard input."""
    if str(path) == "-":
        return sys.stdin.read()
    return Path(path).read_text()


# -- transformations ----------------------------------------------------------

def normalize_prices(panel: PricePanel, anchor: date | str, level: float = 100.0) -> PricePanel:
    """Scale every column so its value on ``anchor`` equals ``level``."""
    if isinstance(anchor, str):
        anchor = date.fromisoformat(anchor)
    if not level > 0:
        raise ValidationError("normalization level must be positive")
    try:
        row = panel.dates.index(anchor)
    except ValueError:
        raise ValidationError(f"anchor date {anchor} is not in the panel") from None
    scaled = panel.prices * (level / panel.prices[row])
    return PricePanel(panel.dates, panel.tickers, scaled)


def linear_returns(panel: PricePanel) -> ReturnPanel:
    """Successive price differences; percent returns when prices are normalized at 100."""
    if len(panel.dates) < 2:
        raise ValidationError("need at least two price rows to form returns")
    R = np.diff(panel.prices, axis=0)
    return ReturnPanel(R, panel.tickers, periods=panel.dates[1:])


def window_last(panel: ReturnPanel, M: int) -> ReturnPanel:
    """Keep the last ``M`` return rows; weights are sliced and renormalized."""
    if M < 1:
        raise ValidationError("window length must be positive")
    if M > panel.M:
        raise ValidationError(f"window of {M} exceeds the {panel.M} available return rows")
    periods = panel.periods[-M:] if panel.periods is not None else None
    weights = panel.weights[-M:] if panel.weights is not None else None
    return ReturnPanel(panel.returns[-M:], panel.tickers, weights, panel.rho, periods)


# -- weights ------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    """Recipe for an observation-weight vector.

    ``late-heavy`` holds ``head_level`` over the first ``head_len`` periods,
    ``tail_level`` over the last ``tail_len`` and ramps linearly in between.
    """

    kind: str = "uniform"
    head_len: int = 70
    tail_len: int = 30
    head_level: float = 1 / 280
    tail_level: float = 1 / 140
    raw: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "late-heavy", "explicit"):
            raise ValidationError(f"unknown weight kind {self.kind!r}")
        if self.kind == "explicit" and not self.raw:
            raise ValidationError("explicit weights need a raw vector")
        if self.kind == "late-heavy":
            if self.head_len < 0 or self.tail_len < 0:
                raise ValidationError("late-heavy lengths must be non-negative")
            if not (0 < self.head_level < self.tail_level):
                raise ValidationError("late-heavy levels need 0 < head_level < tail_level")


def make_weights(spec: WeightSpec, M: int) -> np.ndarray:
    """Positive weight vector of length ``M`` summing to one."""
    if M < 1:
        raise ValidationError("M must be positive")
    if spec.kind == "uniform":
        return np.full(M, 1.0 / M)
    if spec.kind == "explicit":
        return _normalized_weights(spec.raw, M)
    if spec.head_len + spec.tail_len > M:
        raise ValidationError(
            f"late-heavy head ({spec.head_len}) + tail ({spec.tail_len}) exceeds M = {M}"
        )
    ramp = M - spec.head_len - spec.tail_len
    i = np.arange(1, ramp + 1)
    middle = spec.head_level + (spec.tail_level - spec.head_level) * i / (ramp + 1)
    w = np.concatenate([
        np.full(spec.head_len, spec.head_level),
        middle,
        np.full(spec.tail_len, spec.tail_level),
    ])
    return w / w.sum()


def parse_weight_spec(text: str) -> WeightSpec:
    """Parse ``uniform``, ``late-heavy[:h,t,hl,tl]``, ``w1,w2,...`` or ``@file``."""
    text = text.strip()
    if text == "uniform":
        return WeightSpec("uniform")
    if text.startswith("late-heavy"):
        rest = text[len("late-heavy"):]
        if not rest:
            return WeightSpec("late-heavy")
        if not rest.startswith(":"):
            raise ValidationError(f"bad weight spec {text!r}")
        parts = rest[1:].split(",")
        if len(parts) != 4:
            raise ValidationError("late-heavy takes head_len,tail_len,head_level,tail_level")
        try:
            return WeightSpec(
                "late-heavy", int(parts[0]), int(parts[1]),
                _fraction(parts[2]), _fraction(parts[3]),
            )
        except ValueError as exc:
            raise ValidationError(f"bad late-heavy parameters: {exc}") from None
    if text.startswith("@"):
        return WeightSpec("explicit", raw=tuple(parse_weight_column(read_text(text[1:]))))
    try:
        raw = tuple(_fraction(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"bad weight spec {text!r}") from None
    return WeightSpec("explicit", raw=raw)


def _fraction(token: str) -> float:
    token = token.strip()
    if "/" in token:
        num, den = token.split("/", 1)
        return float(num) / float(den)
    return float(token)


# -- export -------------------------------------------------------------------

def _num(x: float) -> str:
    return repr(float(x))


def format_prices(panel: PricePanel, delimiter: str = "\t") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["date", *panel.tickers])
    for d, row in zip(panel.dates, panel.prices):
        writer.writerow([d.isoformat(), *(_num(v) for v in row)])
    return buf.getvalue()


def format_returns(panel: ReturnPanel, delimiter: str = "\t") -> str:
    """Returns export: ``period_end`` then one column per ticker."""
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["period_end", *panel.tickers])
    if panel.periods is None:
        raise ValidationError("returns export needs period labels")
    for d, row in zip(panel.periods, panel.returns):
        writer.writerow([d.isoformat(), *(_num(v) for v in row)])
    return buf.getvalue()


def format_weights(weights: np.ndarray) -> str:
    return "weight\n" + "".join(_num(w) + "\n" for w in weights)
