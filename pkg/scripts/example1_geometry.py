"""Three securities with a planar XY picture: corner portfolios of both paths.

    python scripts/example1_geometry.py
"""
import json
from pathlib import Path

import numpy as np

from riskdecomp.analysis import Portfolio, project
from riskdecomp.decomp import Decomposition
from riskdecomp.optimizer import min_abs_y_path, minvar_corners, path_stats

DECOMP = Path(__file__).resolve().parents[1] / "tests" / "data" / "example1_decomp.json"


def show(title, d, path):
    stats = path_stats(d, path)
    print(title)
    for i, c in enumerate(path.corners):
        mark = "*" if i == path.min_variance_index else " "
        w = " ".join(f"{v:6.4f}" for v in c.weights)
        print(f" {mark} [{w}]  x={c.x:7.4f}  e={c.e:7.4f}  sigma={c.sigma:7.4f}")
    print(f"   avg e = {stats.avg_e:.4f}, rms sigma = {stats.rms_sigma:.4f}\n")


def main():
    d = Decomposition.from_dict(json.loads(DECOMP.read_text()))
    for name, p in (("P", [0.5, 0.5, 0.0]), ("Q", [0.0, 0.6, 0.4])):
        pr = project(d, Portfolio(np.array(p), d.tickers))
        print(f"{name} projects to (x, y) = ({pr.x:g}, {pr.y:g})")
    print()
    show("minimum-variance set, minimum to maximum E (* marks p_E)", d,
         minvar_corners(d, full=True))
    show("minimum-|y| path over the whole x range", d, min_abs_y_path(d))


if __name__ == "__main__":
    main()
