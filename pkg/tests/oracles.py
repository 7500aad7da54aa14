"""Independent reference computations used by the tests.

Nothing here calls into the decomposition or path code under test.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def weighted_cov(R, w, rho=1.0) -> np.ndarray:
    """rho times the omega-weighted (biased) covariance of the columns of R."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    w = np.asarray(w, dtype=float)
    if R.shape[0] == 1:
        return np.zeros((R.shape[1], R.shape[1]))
    C = np.cov(R, rowvar=False, aweights=w / w.sum(), bias=True)
    return rho * np.atleast_2d(C)


def weighted_mean(R, w, rho=1.0) -> np.ndarray:
    return rho * np.average(np.atleast_2d(R), axis=0, weights=np.asarray(w, dtype=float))


def simplex_chunks(n: int, step: float):
    """Yield arrays of simplex grid points (rows sum to 1) with spacing ``step``."""
    N = int(round(1 / step))
    if n == 1:
        yield np.ones((1, 1))
    elif n == 2:
        a = np.arange(N + 1) / N
        yield np.column_stack([a, 1 - a])
    elif n == 3:
        i, j = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
        keep = i + j <= N
        i, j = i[keep], j[keep]
        yield np.column_stack([i, j, N - i - j]) / N
    elif n in (4, 5):
        ii, jj = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
        outer = [(k,) for k in range(N + 1)] if n == 4 else \
            [(k, l) for k in range(N + 1) for l in range(N + 1 - k)]
        for head in outer:
            rest = N - sum(head)
            keep = ii + jj <= rest
            i, j = ii[keep], jj[keep]
            cols = [np.full(i.shape, h) for h in head] + [i, j, rest - i - j]
            yield np.column_stack(cols) / N
    else:
        raise ValueError("grid oracle supports n <= 5")


def interp_path(keys: np.ndarray, feats: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Linear interpolation of corner feature rows at query keys (keys increasing)."""
    if len(keys) == 1:
        return np.repeat(feats[:1], len(q), axis=0)
    if np.all(np.diff(keys) > 0):
        return np.column_stack([np.interp(q, keys, col) for col in feats.T])
    idx = np.clip(np.searchsorted(keys, q, side="right") - 1, 0, len(keys) - 2)
    span = keys[idx + 1] - keys[idx]
    safe = np.where(span > 0, span, 1.0)
    t = np.clip(np.where(span > 0, (q - keys[idx]) / safe, 0.0), 0.0, 1.0)[:, None]
    return (1 - t) * feats[idx] + t * feats[idx + 1]


@dataclass
class GridCheck:
    """Outcome of comparing a path value function against the simplex grid."""

    min_gap: float         # min over grid of objective minus path value; >= -tiny
    worst_excess: float    # max over bins of (best grid objective - local path bound)
    resolution: float
    scale: float

    def optimal(self, rel=1e-9) -> bool:
        return self.min_gap >= -rel * max(1.0, self.scale)

    def tight(self) -> bool:
        return self.worst_excess <= 2 * self.resolution + 1e-12 * max(1.0, self.scale)


class PathGridOracle:
    """Grid comparison for a path keyed on a linear feature of the portfolio.

    ``A`` holds one linear feature per row (evaluated on portfolios as
    ``P @ A.T``); row 0 is the key. ``objective`` maps feature rows to the
    quantity the path minimizes. ``corner_w`` are the path's corner weights
    in increasing key order.
    """

    def __init__(self, A, objective: Callable[[np.ndarray], np.ndarray], corner_w, step):
        self.A = np.asarray(A, dtype=float)
        self.obj = objective
        self.cf = np.asarray(corner_w, dtype=float) @ self.A.T
        self.keys = self.cf[:, 0]
        self.step = step
        n = self.A.shape[1]
        diffs = [np.linalg.norm(self.A[1:, i] - self.A[1:, j])
                 for i in range(n) for j in range(n)]
        self.resolution = step * max(diffs)
        self.h = step * float(np.ptp(self.A[0])) or 1.0
        self.lo, self.hi = float(self.keys[0]), float(self.keys[-1])
        self.nbins = max(1, int(np.ceil((self.hi - self.lo) / self.h)))
        self.best = np.full(self.nbins, np.inf)
        self.min_gap = np.inf

    def path_value(self, q):
        return self.obj(interp_path(self.keys, self.cf, np.asarray(q, dtype=float)))

    def feed(self, P):
        f = P @ self.A.T
        key = f[:, 0]
        slack = 1e-9 * max(1.0, float(np.max(np.abs(self.A))))
        sel = (key >= self.lo - slack) & (key <= self.hi + slack)
        if not np.any(sel):
            return
        f, key = f[sel], key[sel]
        val = self.obj(f)
        gap = val - self.obj(interp_path(self.keys, self.cf, key))
        self.min_gap = min(self.min_gap, float(gap.min()))
        b = np.clip(((key - self.lo) / self.h).astype(np.intp), 0, self.nbins - 1)
        # per-bin minimum; np.minimum.at is far slower than sort + reduceat
        order = np.argsort(b, kind="stable")
        b, val = b[order], val[order]
        starts = np.flatnonzero(np.r_[True, b[1:] != b[:-1]])
        bins = b[starts]
        self.best[bins] = np.minimum(self.best[bins], np.minimum.reduceat(val, starts))

    def result(self) -> GridCheck:
        edges = self.lo + self.h * np.arange(self.nbins + 1)
        left = np.clip(edges[:-1] - self.h, self.lo, self.hi)
        right = np.clip(edges[1:] + self.h, self.lo, self.hi)
        # objective along either path is convex in the key, so its max over a
        # window sits at an end
        bound = np.maximum(self.path_value(left), self.path_value(right))
        filled = np.isfinite(self.best)
        excess = float(np.max(self.best[filled] - bound[filled])) if filled.any() else np.inf
        scale = float(np.max(np.abs(self.A)))
        return GridCheck(self.min_gap, excess, self.resolution, scale)


def run_grid(oracles, n, step):
    for P in simplex_chunks(n, step):
        for o in oracles:
            o.feed(P)
    return [o.result() for o in oracles]


def abs_y_objective(f):
    return np.abs(f[:, 1])


def sigma_objective(f0):
    def obj(f):
        return np.sqrt(f0 ** 2 + np.sum(f[:, 1:] ** 2, axis=1))
    return obj
