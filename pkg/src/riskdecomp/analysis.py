"""Reports derived from a :class:`~riskdecomp.decomp.Decomposition`: variance
breakdowns, XY/EV projections of portfolios, relative risk components and
the fixed-layout text table."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .decomp import Decomposition, approx_expected
from .errors import ValidationError


@dataclass(frozen=True)
class Portfolio:
    """Proportions on the notional simplex, aligned with a ticker list."""

    weights: np.ndarray
    tickers: tuple[str, ...]

    def __post_init__(self):
        p = np.array(self.weights, dtype=float).ravel()
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if p.shape[0] != len(self.tickers):
            raise ValidationError("portfolio length does not match its tickers")
        if not np.all(np.isfinite(p)):
            raise ValidationError("portfolio weights must be finite")
        if np.any(p < -1e-12):
            raise ValidationError("portfolio weights must be non-negative")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValidationError(f"portfolio weights sum to {p.sum()!r}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "weights", p)

    @classmethod
    def single(cls, tickers: Sequence[str], ticker: str) -> "Portfolio":
        p = np.zeros(len(tickers))
        p[list(tickers).index(ticker)] = 1.0
        return cls(p, tuple(tickers))

    @classmethod
    def from_mapping(cls, tickers: Sequence[str], mix: Mapping[str, float],
                     tol: float = 1e-6) -> "Portfolio":
        """Build from ``{ticker: weight}``; sums within ``tol`` of 1 are renormalized."""
        p = np.zeros(len(tickers))
        lookup = {t: i for i, t in enumerate(tickers)}
        for t, v in mix.items():
            if t not in lookup:
                raise ValidationError(f"unknown ticker {t!r}")
            p[lookup[t]] += v
        total = p.sum()
        if abs(total - 1.0) > tol:
            raise ValidationError(f"portfolio weights sum to {total:g}, not 1")
        return cls(p / total, tuple(tickers))


def parse_portfolio(text: str, tickers: Sequence[str]) -> Portfolio:
    """Parse ``T1=w1,T2=w2,...``."""
    mix: dict[str, float] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"portfolio item {item!r} is not TICKER=WEIGHT")
        try:
            mix[name.strip()] = mix.get(name.strip(), 0.0) + float(value)
        except ValueError:
            raise ValidationError(f"bad weight in {item!r}") from None
    if not mix:
        raise ValidationError("empty portfolio")
    return Portfolio.from_mapping(tickers, mix)


def _check_aligned(d: Decomposition, p: Portfolio) -> np.ndarray:
    if len(p.tickers) != d.n:
        raise ValidationError(f"portfolio has {len(p.tickers)} weights for {d.n} securities")
    if p.tickers != d.tickers:
        raise ValidationError("portfolio tickers do not match the decomposition")
    return p.weights


# -- variance breakdown ----------------------------------------------------------

@dataclass(frozen=True)
class VarianceBreakdown:
    """Total variance split into systemic, productive and nonproductive parts."""

    systemic: float
    productive: float
    major_nonproductive: float
    other_nonproductive: float
    per_security: np.ndarray
    tickers: tuple[str, ...]

    @property
    def nonsystemic(self) -> float:
        return self.productive + self.major_nonproductive + self.other_nonproductive

    @property
    def total(self) -> float:
        return self.systemic + self.nonsystemic

    def percentages(self) -> dict[str, float]:
        t = self.total
        if t == 0:
            return {k: 0.0 for k in ("systemic", "productive", "major_nonproductive",
                                     "other_nonproductive")}
        return {
            "systemic": 100 * self.systemic / t,
            "productive": 100 * self.productive / t,
            "major_nonproductive": 100 * self.major_nonproductive / t,
            "other_nonproductive": 100 * self.other_nonproductive / t,
        }

    def to_dict(self) -> dict:
        return {
            "systemic": self.systemic,
            "productive": self.productive,
            "major_nonproductive": self.major_nonproductive,
            "other_nonproductive": self.other_nonproductive,
            "total": self.total,
            "nonsystemic": self.nonsystemic,
            "percentages": self.percentages(),
            "per_security": dict(zip(self.tickers, (float(v) for v in self.per_security))),
        }


def variance_breakdown(d: Decomposition) -> VarianceBreakdown:
    rows = np.sum(d.F ** 2, axis=1)
    return VarianceBreakdown(
        systemic=d.n * d.f0 ** 2,
        productive=float(rows[0]),
        major_nonproductive=float(rows[1]) if d.m > 1 else 0.0,
        other_nonproductive=float(rows[2:].sum()),
        per_security=np.sum(d.F ** 2, axis=0),
        tickers=d.tickers,
    )


# -- projections -----------------------------------------------------------------

@dataclass(frozen=True)
class Projection:
    x: float
    y: float
    ynorm: float
    e: float
    v: float

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.v))


def project(d: Decomposition, p: Portfolio) -> Projection:
    """Productive/major coordinates, expected return and variance of ``p``."""
    w = _check_aligned(d, p)
    f = d.F @ w
    x = float(f[0])
    y = float(f[1]) if d.m > 1 else 0.0
    ynorm = float(np.linalg.norm(f[1:]))
    return Projection(x, y, ynorm, float(d.E @ w), d.f0 ** 2 + x * x + ynorm * ynorm)


@dataclass(frozen=True)
class RiskComponents:
    e: float
    systemic: float
    productive: float
    major_nonproductive: float
    other_nonproductive: float

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.systemic ** 2 + self.productive ** 2
                             + self.major_nonproductive ** 2 + self.other_nonproductive ** 2))

    def to_dict(self) -> dict:
        return {
            "e": self.e,
            "systemic": self.systemic,
            "productive": self.productive,
            "major_nonproductive": self.major_nonproductive,
            "other_nonproductive": self.other_nonproductive,
            "sigma": self.sigma,
        }


def risk_decomposition(d: Decomposition, p: Portfolio) -> RiskComponents:
    """Four-way split of a portfolio's risk relative to this universe."""
    pr = project(d, p)
    other = np.sqrt(max(pr.ynorm ** 2 - pr.y ** 2, 0.0))
    return RiskComponents(pr.e, d.f0, abs(pr.x), abs(pr.y), float(other))


# -- rendering -------------------------------------------------------------------

def render_table(d: Decomposition) -> str:
    """Fixed-layout text table: E row, optional approx row, F rows with
    row variance totals, per-security variance row and a parameter footer."""
    vb = variance_breakdown(d)
    nonsys = vb.nonsystemic
    width = max(8, max(len(t) for t in d.tickers) + 2)

    def cells(values, fmt):
        return "".join(f"{format(float(v), fmt):>{width}}" for v in values)

    def pct(part, whole):
        return f"{100 * part / whole:.1f}%" if whole > 0 else "-"

    lines = [f"{'fund':<7}" + "".join(f"{t:>{width}}" for t in d.tickers)]
    lines.append(f"{'E':<7}" + cells(d.E, ".2f"))
    if d.eflag:
        lines.append(f"{'approx':<7}" + cells(approx_expected(d), ".2f"))
    row_var = np.sum(d.F ** 2, axis=1)
    for i, row in enumerate(d.F):
        label = "F" if i == 0 else ""
        lines.append(f"{label:<7}" + cells(row, ".2f")
                     + f" | {row_var[i]:>8.0f} {pct(row_var[i], nonsys):>7}")
    lines.append(f"{'V^_T':<7}" + cells(vb.per_security, ".0f")
                 + f" | {nonsys:>8.0f} {'100%' if nonsys > 0 else '-':>7}")
    lines.append(f"{'':<7}" + "".join(f"{pct(v, nonsys):>{width}}" for v in vb.per_security))
    lines.append(f"f0 = {d.f0:.2f}, e0 = {d.e0:.2f}, eF = {d.eF:.3f}")
    return "\n".join(lines) + "\n"


def render_breakdown(vb: VarianceBreakdown) -> str:
    pc = vb.percentages()
    rows = [
        ("systemic variance (n f0^2)", vb.systemic, pc["systemic"]),
        ("productive variance (sum x^2)", vb.productive, pc["productive"]),
        ("major nonproductive variance (sum y^2)", vb.major_nonproductive,
         pc["major_nonproductive"]),
        ("other nonproductive variance", vb.other_nonproductive, pc["other_nonproductive"]),
        ("total variance", vb.total, 100.0 if vb.total > 0 else 0.0),
    ]
    return "".join(f"{label:<40}{value:>10.0f}{p:>8.1f}%\n" for label, value, p in rows)


def plot_data_csv(
    d: Decomposition,
    portfolios: Mapping[str, Portfolio] | None = None,
    flip_y: bool = False,
) -> str:
    """CSV of ticker, x, y, e, sigma for every security plus named portfolios."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["ticker", "x", "y", "e", "sigma"])
    sign = -1.0 if flip_y else 1.0
    items = [(t, Portfolio.single(d.tickers, t)) for t in d.tickers]
    items += list((portfolios or {}).items())
    for name, p in items:
        pr = project(d, p)
        writer.writerow([name, repr(pr.x), repr(sign * pr.y + 0.0), repr(pr.e), repr(pr.sigma)])
    return buf.getvalue()
