"""Decompositions and portfolio paths for the ETF universes of 2010 and 2011.

    python scripts/reproduce_tables.py AdjustedClosingPrices_2010-2011.csv

The file holds daily adjusted closes (tab- or comma-separated, header
``date`` then tickers). Prices are normalized at 100 on 2010-12-31.
"""
import argparse
from datetime import date
from pathlib import Path

from riskdecomp.analysis import (Portfolio, render_breakdown, render_table, risk_decomposition,
                                 variance_breakdown)
from riskdecomp.decomp import decompose
from riskdecomp.ingest import (PricePanel, WeightSpec, linear_returns, make_weights,
                               normalize_prices, parse_prices, window_last)
from riskdecomp.optimizer import min_abs_y_path, minvar_corners, path_stats

FIVE = ("IEF", "IWB", "IWM", "EFA", "EEM")
FOUR = ("ECH", "EPU", "EWM", "EWT")
EIGHTEEN = ("BKF", "ECH", "EEM", "EMIF", "EPU", "ESR", "EWM", "EWT", "EWW", "EWY", "EWZ",
            "EZA", "FCHI", "FXI", "ILF", "INDY", "THD", "TUR")
ANCHOR = date(2010, 12, 31)


def universe(prices, tickers, year, weighting):
    panel = normalize_prices(prices.select(tickers), ANCHOR)
    if year == 2010:
        k = panel.dates.index(ANCHOR) + 1
        panel = PricePanel(panel.dates[:k], panel.tickers, panel.prices[:k])
    M = 200 if year == 2010 else 252
    rp = window_last(linear_returns(panel), M)
    return decompose(rp.with_weights(make_weights(WeightSpec(weighting), M), rho=252.0))


def show_path(title, d, path):
    stats = path_stats(d, path)
    print(f"\n{title}")
    print("  " + " ".join(f"{t:>6}" for t in d.tickers) + "       x       e   sigma")
    for c in path.corners:
        print("  " + " ".join(f"{v:6.3f}" for v in c.weights)
              + f" {c.x:7.2f} {c.e:7.2f} {c.sigma:7.2f}")
    print(f"  avg e = {stats.avg_e:.2f}, rms sigma = {stats.rms_sigma:.2f}")


def show_paths(d):
    eff = minvar_corners(d)
    show_path("efficient path", d, eff)
    show_path("minimum-|y| path over the efficient x range", d,
              min_abs_y_path(d, x_range=(eff.xs[0], eff.xs[-1])))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("prices", type=Path)
    args = ap.parse_args()
    prices = parse_prices(args.prices.read_text())

    for weighting in ("late-heavy", "uniform"):
        d = universe(prices, FIVE, 2010, weighting)
        print(f"\n== five large ETFs, last 200 days of 2010, {weighting} weights ==")
        print(render_table(d))
        print(render_breakdown(variance_breakdown(d)))
        if weighting == "late-heavy":
            show_paths(d)

    d18 = universe(prices, EIGHTEEN, 2010, "late-heavy")
    print("\n== eighteen emerging market ETFs, last 200 days of 2010, late-heavy ==")
    print(render_breakdown(variance_breakdown(d18)))

    d4 = universe(prices, FOUR, 2010, "late-heavy")
    print("\n== four emerging market ETFs, last 200 days of 2010, late-heavy ==")
    print(render_table(d4))
    show_paths(d4)

    print("\n== risk of EEM and of p_E relative to the fund universe ==")
    d5 = universe(prices, FIVE, 2010, "late-heavy")
    pe = minvar_corners(d18)
    mix = {t: v for t, v in zip(d18.tickers, pe.weights[pe.min_variance_index]) if v > 0}
    rows = [("EEM / 18 funds", d18, Portfolio.single(d18.tickers, "EEM")),
            ("EEM / 5 funds", d5, Portfolio.single(d5.tickers, "EEM")),
            ("p_E / 18 funds", d18, Portfolio.from_mapping(d18.tickers, mix))]
    if set(mix) <= set(d4.tickers):
        rows.append(("p_E / 4 funds", d4, Portfolio.from_mapping(d4.tickers, mix)))
    print(f"  {'':16}{'e':>7}{'f0':>7}{'|x|':>7}{'|y|':>7}{'other':>7}{'sigma':>7}")
    for label, d, p in rows:
        r = risk_decomposition(d, p)
        vals = (r.e, r.systemic, r.productive, r.major_nonproductive, r.other_nonproductive,
                r.sigma)
        print(f"  {label:16}" + "".join(f"{v:7.2f}" for v in vals))

    for tickers, label in ((FIVE, "five large"), (FOUR, "four emerging market")):
        print(f"\n== {label} ETFs, 2011, uniform weights, rho = M = 252 ==")
        print(render_table(universe(prices, tickers, 2011, "uniform")))


if __name__ == "__main__":
    main()
