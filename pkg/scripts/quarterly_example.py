"""Three quarters of five ETFs: prices to returns to decomposition to paths.

    python scripts/quarterly_example.py
"""
from pathlib import Path

from riskdecomp.analysis import render_breakdown, render_table, variance_breakdown
from riskdecomp.decomp import decompose
from riskdecomp.ingest import format_returns, linear_returns, parse_prices
from riskdecomp.optimizer import format_path_csv, minvar_corners, path_stats

PRICES = Path(__file__).resolve().parents[1] / "tests" / "data" / "table5_prices.tsv"


def main():
    returns = linear_returns(parse_prices(PRICES.read_text()))
    print("quarterly returns (prices normalized at 100 on the last date)")
    print(format_returns(returns))
    # weights 2:3:4 favour recent quarters; four quarters a year
    d = decompose(returns.with_weights([2, 3, 4], rho=4.0))
    print(render_table(d))
    print()
    print(render_breakdown(variance_breakdown(d)))
    if d.eflag:
        print("\nnote: E is not affine in the productive coordinate here (eflag)")
    path = minvar_corners(d)
    print("\nefficient path")
    print(format_path_csv(path, path_stats(d, path)), end="")


if __name__ == "__main__":
    main()
