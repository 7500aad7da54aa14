"""Command-line frontend: ``riskdecomp <command> INPUT [options]``.

INPUT is a price file (header starts with ``date``) or a returns file
(header starts with ``period_end``); ``-`` reads standard input. Commands
that need a decomposition accept ``--decomp FILE`` instead of INPUT.

Exit codes: 0 success, 2 invalid input or arguments, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (parse_portfolio, plot_data_csv, project, render_breakdown,
                       render_table, risk_decomposition, variance_breakdown)
from .decomp import Decomposition, decompose
from .errors import NumericalError, ValidationError
from .ingest import (format_returns, linear_returns, make_weights, normalize_prices,
                     parse_prices, parse_returns, parse_weight_spec, read_text, window_last)
from .optimizer import (format_path_csv, min_abs_y_path, minvar_corners, path_stats,
                        shares_per_100)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


# -- input pipeline -------------------------------------------------------------

def _header_field(text: str) -> str:
    for line in text.splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            return line.replace("\t", ",").split(",", 1)[0].strip().lower()
    raise ValidationError("empty input")


def _tickers(args):
    return [t.strip() for t in args.tickers.split(",") if t.strip()] if args.tickers else None


def load_prices(args):
    if args.input is None:
        raise ValidationError("an input price file is required")
    panel = parse_prices(read_text(args.input))
    if _tickers(args):
        panel = panel.select(_tickers(args))
    return panel


def load_returns(args):
    """Returns panel after ticker selection, normalization and windowing."""
    if args.input is None:
        raise ValidationError("an input price or returns file is required")
    text = read_text(args.input)
    kind = _header_field(text)
    if kind == "date":
        prices = parse_prices(text)
        if _tickers(args):
            prices = prices.select(_tickers(args))
        if args.anchor:
            prices = normalize_prices(prices, args.anchor, args.level)
        panel = linear_returns(prices)
    elif kind == "period_end":
        if args.anchor:
            raise ValidationError("--anchor applies to price input only")
        panel = parse_returns(text)
        if _tickers(args):
            panel = panel.select(_tickers(args))
    else:
        raise ValidationError("input header must start with 'date' or 'period_end'")
    if args.window:
        panel = window_last(panel, args.window)
    return panel


def load_decomposition(args) -> Decomposition:
    if getattr(args, "decomp", None):
        if args.input is not None:
            raise ValidationError("give either INPUT or --decomp, not both")
        d = Decomposition.from_json(read_text(args.decomp))
        if _tickers(args):
            raise ValidationError("--tickers needs price or returns input")
        return d
    panel = load_returns(args)
    w = make_weights(parse_weight_spec(args.weights), panel.M)
    d = decompose(panel.with_weights(w, args.rho))
    if d.eflag:
        print("note: expected returns are not affine in the productive coordinate "
              "(eflag); e0 + eF x is a least-squares approximation", file=sys.stderr)
    return d


# -- output ---------------------------------------------------------------------

def _format(args) -> str:
    if args.format:
        return args.format
    if args.output:
        ext = Path(args.output).suffix.lower()
        return {".json": "json", ".csv": "csv"}.get(ext, "table")
    return "table" if sys.stdout.isatty() else "json"


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _csv_rows(header, rows) -> str:
    import csv
    import io
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _path_doc(path, stats) -> dict:
    return {
        "tickers": list(path.tickers),
        "min_variance_corner": path.min_variance_index,
        "corners": [
            {"weights": [float(w) for w in c.weights], "x": c.x, "e": c.e, "sigma": c.sigma}
            for c in path.corners
        ],
        "avg_e": stats.avg_e,
        "rms_sigma": stats.rms_sigma,
    }


def _path_table(path, stats) -> str:
    width = max(7, max(len(t) for t in path.tickers) + 1)
    head = "".join(f"{t:>{width}}" for t in path.tickers)
    lines = [f"{'#':>3}{head}{'x':>9}{'e':>9}{'sigma':>9}"]
    for i, c in enumerate(path.corners):
        cells = "".join(f"{w:>{width}.3f}" for w in c.weights)
        mark = "*" if i == path.min_variance_index else " "
        lines.append(f"{i:>2}{mark}{cells}{c.x:>9.2f}{c.e:>9.2f}{c.sigma:>9.2f}")
    lines.append(f"avg e = {stats.avg_e:.2f}, rms sigma = {stats.rms_sigma:.2f}")
    if path.min_variance_index is not None:
        lines.append("* absolute minimum-variance portfolio")
    return "\n".join(lines) + "\n"


def _write_path(args, path) -> None:
    stats = path_stats(args.d, path)
    fmt = _format(args)
    if fmt == "json":
        _emit(args, _json(_path_doc(path, stats)))
    elif fmt == "csv":
        _emit(args, format_path_csv(path, stats))
    else:
        _emit(args, _path_table(path, stats))


# -- commands -------------------------------------------------------------------

def cmd_returns(args) -> None:
    panel = load_returns(args)
    fmt = _format(args)
    if fmt == "json":
        _emit(args, _json({
            "tickers": list(panel.tickers),
            "periods": [p.isoformat() for p in panel.periods],
            "returns": panel.returns.tolist(),
        }))
    else:
        _emit(args, format_returns(panel, "," if fmt == "csv" else "\t"))


def cmd_decompose(args) -> None:
    d = load_decomposition(args)
    fmt = "table" if args.table else _format(args)
    if fmt == "json":
        _emit(args, d.to_json())
    elif fmt == "csv":
        rows = [["E", *map(repr, map(float, d.E))]]
        rows += [[f"F{i + 1}", *map(repr, map(float, r))] for i, r in enumerate(d.F)]
        text = _csv_rows(["row", *d.tickers], rows)
        text += f"# f0={d.f0!r}\n# e0={d.e0!r}\n# eF={d.eF!r}\n# eflag={str(d.eflag).lower()}\n"
        _emit(args, text)
    else:
        _emit(args, render_table(d))


def cmd_frontier(args) -> None:
    args.d = load_decomposition(args)
    _write_path(args, minvar_corners(args.d, rows=args.rows, full=args.full))


def cmd_minypath(args) -> None:
    d = args.d = load_decomposition(args)
    lo, hi = args.x_lo, args.x_hi
    if args.from_min_variance:
        if lo is not None:
            raise ValidationError("--from-min-variance conflicts with --x-lo")
        eff = minvar_corners(d)
        lo = eff.corners[eff.min_variance_index].x
    X = d.F[0]
    x_range = None
    if lo is not None or hi is not None:
        x_range = (float(X.min()) if lo is None else lo, float(X.max()) if hi is None else hi)
    _write_path(args, min_abs_y_path(d, x_range))


def _portfolios(args, d):
    if not args.portfolio:
        raise ValidationError("at least one --portfolio T=w,... is required")
    return [(spec, parse_portfolio(spec, d.tickers)) for spec in args.portfolio]


def cmd_project(args) -> None:
    d = load_decomposition(args)
    out = []
    for spec, p in _portfolios(args, d):
        pr = project(d, p)
        out.append({"portfolio": spec, "x": pr.x, "y": pr.y, "ynorm": pr.ynorm,
                    "e": pr.e, "sigma": pr.sigma})
    _records(args, out, ("x", "y", "ynorm", "e", "sigma"))


def cmd_riskof(args) -> None:
    d = load_decomposition(args)
    out = [{"portfolio": spec, **risk_decomposition(d, p).to_dict()}
           for spec, p in _portfolios(args, d)]
    _records(args, out, ("e", "systemic", "productive", "major_nonproductive",
                         "other_nonproductive", "sigma"))


def _records(args, out, keys) -> None:
    fmt = _format(args)
    if fmt == "json":
        _emit(args, _json(out))
    elif fmt == "csv":
        _emit(args, _csv_rows(["portfolio", *keys],
                              [[r["portfolio"], *(repr(r[k]) for k in keys)] for r in out]))
    else:
        width = max(9, max(len(r["portfolio"]) for r in out) + 1)
        lines = [f"{'portfolio':<{width}}" + "".join(f"{k[:10]:>11}" for k in keys)]
        for r in out:
            lines.append(f"{r['portfolio']:<{width}}"
                         + "".join(f"{r[k]:>11.2f}" for k in keys))
        _emit(args, "\n".join(lines) + "\n")


def cmd_variance(args) -> None:
    vb = variance_breakdown(load_decomposition(args))
    fmt = _format(args)
    if fmt == "json":
        _emit(args, _json(vb.to_dict()))
    elif fmt == "csv":
        pc = vb.percentages()
        rows = [[k, repr(getattr(vb, k)), repr(pc[k])] for k in pc]
        rows.append(["total", repr(vb.total), "100.0"])
        _emit(args, _csv_rows(["component", "variance", "percent"], rows))
    else:
        _emit(args, render_breakdown(vb))


def cmd_plotdata(args) -> None:
    d = load_decomposition(args)
    named = {}
    for item in args.portfolio or []:
        name, sep, spec = item.partition(":")
        if not sep:
            name, spec = item, item
        named[name] = parse_portfolio(spec, d.tickers)
    _emit(args, plot_data_csv(d, named, flip_y=args.flip_y))


def cmd_shares(args) -> None:
    if not args.anchor:
        raise ValidationError("shares needs --anchor, the purchase date")
    prices = load_prices(args)
    if not args.portfolio or len(args.portfolio) != 1:
        raise ValidationError("shares takes exactly one --portfolio")
    p = parse_portfolio(args.portfolio[0], prices.tickers)
    s = shares_per_100(p.weights, prices.row(args.anchor))
    fmt = _format(args)
    if fmt == "json":
        _emit(args, _json(dict(zip(prices.tickers, (float(v) for v in s)))))
    elif fmt == "csv":
        _emit(args, _csv_rows(["ticker", "shares"],
                              [[t, repr(float(v))] for t, v in zip(prices.tickers, s)]))
    else:
        _emit(args, "".join(f"{t:<8}{v:>12.4f}\n" for t, v in zip(prices.tickers, s)))


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riskdecomp", description=__doc__.split("\n\n")[0])
    parser.add_argument("--verbose", action="store_true", help="print version banner to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, decomp=True, pipeline=True):
        p.add_argument("input", nargs="?", help="price or returns file, '-' for stdin")
        if decomp:
            p.add_argument("--decomp", metavar="FILE", help="decomposition JSON instead of INPUT")
        p.add_argument("--tickers", help="comma-separated subset, in output order")
        p.add_argument("--anchor", help="normalization date (YYYY-MM-DD)")
        if pipeline:
            p.add_argument("--level", type=float, default=100.0, help="normalized price level")
            p.add_argument("--window", type=int, help="keep the last M returns")
        if decomp:
            p.add_argument("--weights", default="uniform",
                           help="uniform | late-heavy[:h,t,hl,tl] | w1,w2,... | @file")
            p.add_argument("--rho", type=float, default=1.0, help="periods per unit time")
        p.add_argument("--format", choices=("table", "json", "csv"))
        p.add_argument("-o", "--output", help="output file (format follows extension)")

    p = sub.add_parser("returns", help="price file to normalized linear returns")
    common(p, decomp=False)
    p.set_defaults(func=cmd_returns)

    p = sub.add_parser("decompose", help="factor decomposition of a returns panel")
    common(p)
    p.add_argument("--table", action="store_true", help="render the fixed-layout table")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("frontier", help="minimum-variance corner portfolios")
    common(p)
    p.add_argument("--rows", type=int, help="use only the first K rows of F")
    p.add_argument("--full", action="store_true", help="extend down to the minimum-E security")
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("minypath", help="minimum-|y| path")
    common(p)
    p.add_argument("--x-lo", type=float)
    p.add_argument("--x-hi", type=float)
    p.add_argument("--from-min-variance", action="store_true",
                   help="start at x of the absolute minimum-variance portfolio")
    p.set_defaults(func=cmd_minypath)

    for name, func, text in (("project", cmd_project, "x, y, e, sigma of portfolios"),
                             ("riskof", cmd_riskof, "four-way risk components")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--portfolio", action="append", help="T1=w1,T2=w2,... (repeatable)")
        p.set_defaults(func=func)

    p = sub.add_parser("variance", help="systemic/productive/nonproductive variance")
    common(p)
    p.set_defaults(func=cmd_variance)

    p = sub.add_parser("plotdata", help="CSV of x, y, e, sigma for plotting")
    common(p)
    p.add_argument("--portfolio", action="append", help="[NAME:]T1=w1,... (repeatable)")
    p.add_argument("--flip-y", action="store_true", help="negate y")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("shares", help="shares bought per 100 invested on --anchor")
    common(p, decomp=False, pipeline=False)
    p.add_argument("--portfolio", action="append", help="T1=w1,T2=w2,...")
    p.set_defaults(func=cmd_shares)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            print(f"riskdecomp {__version__}", file=sys.stderr)
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc.strerror or exc}: {getattr(exc, 'filename', '')}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
