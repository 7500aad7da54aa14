"""Portfolio paths through the simplex.

``minvar_corners`` traces minimum-variance portfolios for the covariance
``f0**2 + F[:k].T @ F[:k]`` with a critical-line (parametric active set)
method. ``min_abs_y_path`` minimizes the major nonproductive coordinate
``|y|`` at each productive coordinate ``x`` from the planar XY hull of the
securities. ``path_stats`` integrates expected return and variance along a
path in closed form.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .decomp import Decomposition, EPS0
from .errors import NumericalError, ValidationError

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class Corner:
    weights: np.ndarray
    x: float
    e: float
    sigma: float


@dataclass(frozen=True)
class PortfolioPath:
    """Corner portfolios; the path interpolates linearly between neighbours.

    ``min_variance_index`` points at the absolute minimum-variance corner
    when the path contains it.
    """

    corners: tuple[Corner, ...]
    tickers: tuple[str, ...]
    min_variance_index: int | None = None

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weights for c in self.corners])

    @property
    def xs(self) -> np.ndarray:
        return np.array([c.x for c in self.corners])

    @property
    def es(self) -> np.ndarray:
        return np.array([c.e for c in self.corners])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([c.sigma for c in self.corners])

    def __len__(self) -> int:
        return len(self.corners)


def _corner(d: Decomposition, p: np.ndarray) -> Corner:
    p = np.where(p > 1e-14, p, 0.0)    # drop rounding residue from mixing
    p = p / p.sum()
    f = d.F @ p
    return Corner(p, float(f[0]), float(d.E @ p), float(np.sqrt(d.f0 ** 2 + f @ f)))


def _make_path(d: Decomposition, ps: Sequence[np.ndarray], min_var: int | None = None,
               tol: float = 1e-12) -> PortfolioPath:
    corners: list[Corner] = []
    kept_min = None
    for i, p in enumerate(ps):
        c = _corner(d, p)
        if corners and np.max(np.abs(c.weights - corners[-1].weights)) <= tol:
            if i == min_var:
                kept_min = len(corners) - 1
            continue
        if i == min_var:
            kept_min = len(corners)
        corners.append(c)
    return PortfolioPath(tuple(corners), d.tickers, kept_min)


# -- critical line ----------------------------------------------------------------

def _kkt(V: np.ndarray, E: np.ndarray, S: list[int]):
    """Solve ``V_SS p + g 1 = lam E_S, 1'p = 1`` as ``(p, g) = a + lam b``."""
    s = len(S)
    K = np.zeros((s + 1, s + 1))
    K[:s, :s] = V[np.ix_(S, S)]
    K[:s, s] = 1.0
    K[s, :s] = 1.0
    rhs = np.zeros((s + 1, 2))
    rhs[s, 0] = 1.0
    rhs[:s, 1] = E[S]
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular critical-line system: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise NumericalError("non-finite critical-line solution")
    return sol[:, 0], sol[:, 1]


def regularize(V: np.ndarray, rel: float = 1e-12) -> np.ndarray:
    """Add ``rel * max(diag V)`` to the diagonal when V is singular on the simplex.

    Singularity is judged on the tangent space ``1'd = 0``, where it makes the
    active-set systems singular. Nonsingular inputs are returned unchanged.
    """
    n = V.shape[0]
    if n == 1:
        return V
    basis = np.linalg.svd(np.ones((1, n)))[2][1:]
    top = float(np.max(np.diag(V)))
    if top <= 0:
        top = 1.0                     # every portfolio is riskless
    if np.linalg.eigvalsh(basis @ V @ basis.T).min() > 1e-10 * top:
        return V
    return V + rel * top * np.eye(n)


def _min_variance_on(V: np.ndarray, idx: Sequence[int]) -> np.ndarray:
    """Minimum-variance simplex portfolio restricted to ``idx`` (small sets)."""
    n = V.shape[0]
    idx = list(idx)
    if len(idx) > 12:
        raise NumericalError("too many securities tie for the maximum expected return")
    best, best_v = None, np.inf
    zero = np.zeros(n)
    for r in range(1, len(idx) + 1):
        for S in itertools.combinations(idx, r):
            a, _ = _kkt(V, zero, list(S))
            pS = a[:-1]
            if np.any(pS < -FEAS_TOL):
                continue
            p = np.zeros(n)
            p[list(S)] = np.clip(pS, 0.0, None)
            p /= p.sum()
            grad = V @ p
            if np.any(grad[idx] < grad[list(S)].min() - 1e-9 * (1 + abs(grad).max())):
                continue
            v = p @ V @ p
            if v < best_v - 1e-15 * (1 + abs(v)):
                best, best_v = p, v
    if best is None:
        raise NumericalError("no feasible starting portfolio")
    return best


def critical_line(E, V, full: bool = False) -> list[tuple[float, np.ndarray]]:
    """Turning points of ``argmin p'Vp/2 - lam E'p`` over the simplex.

    Traced from ``lam = +inf`` (maximum-E vertex) downward. The point at
    ``lam = 0`` (absolute minimum variance) is always included; with
    ``full`` the trace continues to ``lam = -inf`` (minimum-E vertex).
    Returns ``(lam, p)`` pairs in decreasing ``lam``.
    """
    E = np.asarray(E, dtype=float)
    V = np.asarray(V, dtype=float)
    n = E.shape[0]
    e_span = float(E.max() - E.min())
    if e_span <= 0:
        raise ValidationError("expected returns are constant: every portfolio is optimal")
    tol_enter = FEAS_TOL * e_span
    V = regularize(V)

    top = [j for j in range(n) if E[j] >= E.max() - EPS0 * max(1.0, abs(E.max()))]
    if len(top) == 1:
        p0 = np.zeros(n)
        p0[top[0]] = 1.0
    else:
        p0 = _min_variance_on(V, top)
    S = [j for j in range(n) if p0[j] > 0]
    points: list[tuple[float, np.ndarray]] = [(np.inf, p0)]
    lam_c = np.inf
    last_in: int | None = None
    last_out: int | None = None
    zero_done = False

    for _ in range(50 * n + 100):
        a, b = _kkt(V, E, S)
        ap, bp = a[:-1], b[:-1]
        out = [k for k in range(n) if k not in S]

        def p_at(lam):
            p = np.zeros(n)
            p[S] = ap + lam * bp
            return p

        cands: list[tuple[float, int, str]] = []
        bscale = float(np.max(np.abs(bp))) if bp.size else 0.0
        if len(S) > 1:
            for pos, i in enumerate(S):
                if i == last_in:
                    continue
                if bp[pos] > 1e-10 * bscale and bp[pos] > 0:
                    lam_i = -ap[pos] / bp[pos]
                    cands.append((min(lam_i, lam_c), i, "leave"))
        for k in out:
            if k == last_out:
                continue
            A_k = V[k, S] @ ap + a[-1]
            B_k = V[k, S] @ bp + b[-1] - E[k]
            if B_k > tol_enter:
                lam_k = -A_k / B_k
                cands.append((min(lam_k, lam_c), k, "enter"))

        if cands:
            lam_next = max(c[0] for c in cands)
            span = 1e-12 * abs(lam_next)
            tied = [c for c in cands if c[0] >= lam_next - span]
            _, j, kind = min(tied, key=lambda c: c[1])
        else:
            lam_next, j, kind = -np.inf, None, None

        if not zero_done and lam_next <= 0 <= lam_c:
            points.append((0.0, p_at(0.0)))
            zero_done = True
            if not full:
                return points
        if j is None:
            # weights sum to one, so a nonzero slope always triggers a leave
            return points
        points.append((lam_next, p_at(lam_next)))
        if kind == "leave":
            S.remove(j)
            last_out, last_in = j, None
        else:
            S = sorted(S + [j])
            last_in, last_out = j, None
        lam_c = lam_next
    raise NumericalError("critical line did not terminate")


def minvar_corners(d: Decomposition, rows: int | None = None, full: bool = False) -> PortfolioPath:
    """Corner portfolios of the minimum-variance set for ``f0**2 + F[:k]'F[:k]``.

    By default the path runs from the absolute minimum-variance portfolio
    to the maximum-E security (the efficient path). ``full`` extends it down
    to the minimum-E security. ``rows`` limits the factor rows used; the
    reported sigma always uses the whole of F.
    """
    k = d.m if rows is None else int(rows)
    if not 1 <= k <= d.m:
        raise ValidationError(f"rows must lie in [1, {d.m}], got {k}")
    E = d.E
    if float(E.max() - E.min()) <= EPS0 * float(np.max(np.abs(E))):
        raise ValidationError("expected returns are constant: every portfolio is optimal")
    Fk = d.F[:k]
    V = d.f0 ** 2 + Fk.T @ Fk
    pts = critical_line(E, V, full=full)
    ps = [p for _, p in reversed(pts)]
    lams = [lam for lam, _ in reversed(pts)]
    min_var = next(i for i, lam in enumerate(lams) if lam == 0.0)
    if not full:
        ps, min_var = ps[min_var:], 0
    return _make_path(d, ps, min_var)


# -- minimum |y| --------------------------------------------------------------------

@dataclass(frozen=True)
class _Chain:
    """Piecewise-linear boundary through security points, sorted by x."""

    x: np.ndarray
    y: np.ndarray
    sec: np.ndarray

    def locate(self, x: float) -> tuple[float, int, int, float]:
        """Value at x plus the two securities and the mixing fraction."""
        xs = self.x
        if len(xs) == 1 or x <= xs[0]:
            return float(self.y[0]), int(self.sec[0]), int(self.sec[0]), 0.0
        if x >= xs[-1]:
            return float(self.y[-1]), int(self.sec[-1]), int(self.sec[-1]), 0.0
        i = int(np.searchsorted(xs, x, side="right")) - 1
        t = (x - xs[i]) / (xs[i + 1] - xs[i])
        return (float(self.y[i] + t * (self.y[i + 1] - self.y[i])),
                int(self.sec[i]), int(self.sec[i + 1]), float(t))


def _half_hull(X: np.ndarray, Y: np.ndarray, lower: bool) -> _Chain:
    """Lower (convex) or upper (concave) boundary of the XY point cloud."""
    order = np.lexsort((np.arange(len(X)), Y if lower else -Y, X))
    pts: list[tuple[float, float, int]] = []
    for j in order:
        if pts and pts[-1][0] == X[j]:
            continue                      # extreme y at this x already taken
        pts.append((float(X[j]), float(Y[j]), int(j)))
    hull: list[tuple[float, float, int]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1, _), (x2, y2, _) = hull[-2], hull[-1]
            cross = (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1)
            if (cross <= 0) if lower else (cross >= 0):
                hull.pop()
            else:
                break
        hull.append(p)
    arr = np.array(hull)
    return _Chain(arr[:, 0], arr[:, 1], arr[:, 2].astype(int))


def _sublevel(x: np.ndarray, c: np.ndarray) -> tuple[float, float] | None:
    """``{t : c(t) <= 0}`` for a convex piecewise-linear function on vertices."""
    neg = np.nonzero(c <= 0)[0]
    if neg.size == 0:
        return None
    i, k = int(neg[0]), int(neg[-1])
    lo = x[i] if i == 0 else x[i - 1] + (x[i] - x[i - 1]) * c[i - 1] / (c[i - 1] - c[i])
    hi = x[k] if k == len(x) - 1 else x[k] + (x[k + 1] - x[k]) * c[k] / (c[k] - c[k + 1])
    return float(lo), float(hi)


def min_abs_y_path(d: Decomposition, x_range: tuple[float, float] | None = None) -> PortfolioPath:
    """Portfolios minimizing ``|F[1] p|`` subject to ``F[0] p = x`` on the simplex.

    Off the x-axis the optimum sits on the lower or upper boundary of the
    XY hull (a two-security mix). Where the axis crosses the hull the path
    interpolates linearly between the two axis-crossing boundary portfolios.
    """
    if d.m < 2:
        raise ValidationError("minimum-|y| path needs at least two rows of F")
    X, Y = d.F[0], d.F[1]
    n = d.n
    xmin, xmax = float(X.min()), float(X.max())
    scale = max(1.0, xmax - xmin, float(np.abs(X).max()))
    slack = 1e-12 * scale
    if x_range is None:
        x_lo, x_hi = xmin, xmax
    else:
        x_lo, x_hi = float(x_range[0]), float(x_range[1])
        if x_lo > x_hi:
            raise ValidationError("empty x range")
        if x_lo < xmin - slack or x_hi > xmax + slack:
            raise ValidationError(f"x range must lie within [{xmin}, {xmax}]")
        x_lo, x_hi = max(x_lo, xmin), min(x_hi, xmax)

    lower = _half_hull(X, Y, lower=True)
    upper = _half_hull(X, Y, lower=False)
    below = _sublevel(lower.x, lower.y)
    above = _sublevel(upper.x, -upper.y)
    axis = None
    if below and above:
        a, b = max(below[0], above[0]), min(below[1], above[1])
        if a <= b + slack:
            axis = (a, max(a, b))

    def mix(i, j, t):
        p = np.zeros(n)
        p[i] += 1.0 - t
        p[j] += t
        return p

    def on_axis(x):
        yl, il, jl, tl = lower.locate(x)
        yu, iu, ju, tu = upper.locate(x)
        pl, pu = mix(il, jl, tl), mix(iu, ju, tu)
        if yu - yl <= 0:
            return pl
        s = min(max(-yl / (yu - yl), 0.0), 1.0)
        return (1.0 - s) * pl + s * pu

    def in_axis(x):
        return axis is not None and axis[0] - slack <= x <= axis[1] + slack

    def at(x):
        if in_axis(x):
            a, b = axis
            pa, pb = on_axis(a), on_axis(b)
            if b - a <= slack:
                return pa
            t = min(max((x - a) / (b - a), 0.0), 1.0)
            return (1.0 - t) * pa + t * pb
        yu, iu, ju, tu = upper.locate(x)
        if yu < 0:
            return mix(iu, ju, tu)
        _, il, jl, tl = lower.locate(x)
        return mix(il, jl, tl)

    cands = {x_lo, x_hi}
    if axis is not None:
        cands.update(v for v in axis if x_lo < v < x_hi)
    for chain, want_upper in ((upper, True), (lower, False)):
        for v in chain.x:
            if not (x_lo < v < x_hi) or in_axis(v):
                continue
            yu = upper.locate(v)[0]
            if (yu < 0) == want_upper:
                cands.add(float(v))
    xs = sorted(cands)
    keep = [xs[0]]
    for v in xs[1:]:
        if v - keep[-1] > slack:
            keep.append(v)
    if x_hi - keep[-1] > 0 and len(keep) > 1 and keep[-1] != x_hi:
        keep[-1] = x_hi
    return _make_path(d, [at(v) for v in keep], None, tol=0.0)


# -- statistics ---------------------------------------------------------------------

@dataclass(frozen=True)
class PathStats:
    avg_e: float
    avg_v: float

    @property
    def rms_sigma(self) -> float:
        return float(np.sqrt(self.avg_v))


def path_stats(d: Decomposition, path: PortfolioPath) -> PathStats:
    """Averages of e and v over the x-range of ``path``.

    ``e`` is linear and ``v`` quadratic along each segment, so both
    integrals are exact per segment.
    """
    if len(path) == 0:
        raise ValidationError("empty path")
    if len(path) == 1:
        c = path.corners[0]
        return PathStats(c.e, c.sigma ** 2)
    xs = path.xs
    span = xs[-1] - xs[0]
    if span == 0:
        raise ValidationError("path has zero x-range")
    f = path.weights @ d.F.T
    e = path.es
    int_e = int_v = 0.0
    for i in range(len(path) - 1):
        dx = xs[i + 1] - xs[i]
        fa, fb = f[i], f[i + 1]
        int_e += dx * (e[i] + e[i + 1]) / 2
        int_v += dx * (d.f0 ** 2 + (fa @ fa + fa @ fb + fb @ fb) / 3)
    return PathStats(float(int_e / span), float(int_v / span))


def format_path_csv(path: PortfolioPath, stats: PathStats | None = None) -> str:
    """``corner_index, <ticker weights>, x, e, sigma`` with ``#`` stats footer."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["corner_index", *path.tickers, "x", "e", "sigma"])
    for i, c in enumerate(path.corners):
        writer.writerow([i, *(repr(float(w)) for w in c.weights), repr(c.x), repr(c.e),
                         repr(c.sigma)])
    if path.min_variance_index is not None:
        buf.write(f"# min_variance_corner={path.min_variance_index}\n")
    if stats is not None:
        buf.write(f"# avg_e={stats.avg_e!r}\n# rms_sigma={stats.rms_sigma!r}\n")
    return buf.getvalue()


def shares_per_100(p, anchor_prices) -> np.ndarray:
    """Shares of each security bought per 100 currency units invested."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(anchor_prices, dtype=float)
    if p.shape != a.shape:
        raise ValidationError("portfolio and price vectors differ in length")
    if np.any(a <= 0):
        raise ValidationError("prices must be positive")
    return 100.0 * p / a
