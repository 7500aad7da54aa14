"""Orthogonal decomposition of periodic returns into systemic, productive
and principal nonproductive risk.

Given returns ``R`` (M x n), observation weights ``w`` and periods per unit
time ``rho``, :func:`decompose` produces ``E, F, f0, e0, eF`` with

* ``V = f0**2 + F.T @ F`` (the scalar is added to every entry),
* ``E = e0 + eF * F[0]`` exactly unless ``eflag`` is set, and always in mean,
* rows ``F[1:]`` pairwise orthogonal with non-increasing norms.

The computation runs at ``rho = 1`` and scales once on exit. Each stage is
exposed as a function so it can be checked on its own.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .ingest import ReturnPanel

EPS0 = np.finfo(float).eps * 1e2


@dataclass(frozen=True)
class Decomposition:
    """Result of :func:`decompose`.

    E: expected returns per unit time, shape (n,).
    F: nonsystemic risk matrix, shape (m, n); row 0 is productive risk.
    f0: systemic risk, e0: systemic expected return, eF: return per unit
    productive risk. eflag: the constant return vector lies in the tangent
    space of the returns flat, so ``E = e0 + eF * F[0]`` is only approximate.
    """

    E: np.ndarray
    F: np.ndarray
    f0: float
    e0: float
    eF: float
    eflag: bool
    tickers: tuple[str, ...]
    rho: float = 1.0

    def __post_init__(self):
        E = np.array(self.E, dtype=float).ravel()
        F = np.atleast_2d(np.array(self.F, dtype=float))
        if F.shape[1] != E.shape[0]:
            raise ValidationError(f"F has {F.shape[1]} columns for {E.shape[0]} securities")
        if len(self.tickers) != E.shape[0]:
            raise ValidationError("ticker count does not match E")
        if not (np.all(np.isfinite(E)) and np.all(np.isfinite(F))
                and np.isfinite([self.f0, self.e0, self.eF]).all()):
            raise ValidationError("decomposition contains non-finite values")
        if self.f0 < 0 or self.eF < 0:
            raise ValidationError("f0 and eF must be non-negative")
        E.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "f0", float(self.f0))
        object.__setattr__(self, "e0", float(self.e0))
        object.__setattr__(self, "eF", float(self.eF))
        object.__setattr__(self, "eflag", bool(self.eflag))
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def n(self) -> int:
        return self.F.shape[1]

    @property
    def tau(self) -> np.ndarray:
        """Row norms of F."""
        return np.linalg.norm(self.F, axis=1)

    def index(self, ticker: str) -> int:
        try:
            return self.tickers.index(ticker)
        except ValueError:
            raise ValidationError(f"unknown ticker {ticker!r}") from None

    def to_dict(self) -> dict:
        return {
            "E": [float(v) for v in self.E],
            "F": [[float(v) for v in row] for row in self.F],
            "f0": self.f0,
            "e0": self.e0,
            "eF": self.eF,
            "eflag": self.eflag,
            "tickers": list(self.tickers),
            "rho": self.rho,
            "m": self.m,
            "n": self.n,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "Decomposition":
        try:
            E = doc["E"]
            tickers = doc.get("tickers") or [f"S{j + 1}" for j in range(len(E))]
            d = cls(
                E=E, F=doc["F"], f0=doc.get("f0", 0.0), e0=doc.get("e0", 0.0),
                eF=doc.get("eF", 0.0), eflag=doc.get("eflag", False),
                tickers=tickers, rho=doc.get("rho", 1.0),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed decomposition document: {exc}") from None
        for key, value in (("m", d.m), ("n", d.n)):
            if key in doc and doc[key] != value:
                raise ValidationError(f"decomposition field {key}={doc[key]} disagrees with F")
        return d

    @classmethod
    def from_json(cls, text: str) -> "Decomposition":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}") from None


# -- oracles ------------------------------------------------------------------

def expected_returns(panel: ReturnPanel) -> np.ndarray:
    """``E = rho * w' R``."""
    return panel.rho * (panel.omega() @ panel.returns)


def covariance(panel: ReturnPanel) -> np.ndarray:
    """Weighted covariance per unit time, ``rho * sum_i w_i z_ij z_ik``."""
    w = panel.omega()
    Z = panel.returns - w @ panel.returns
    return panel.rho * (Z.T * w) @ Z


# -- stages -------------------------------------------------------------------

@dataclass(frozen=True)
class RiskPanel:
    """Square-root-weighted risk vectors ``Z = diag(sqrt(w)) R - sqrt(w) E``."""

    Z: np.ndarray
    sigZ: float


def risk_panel(R: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, RiskPanel]:
    """Per-period expected returns and the matching risk panel (rho = 1)."""
    E = w @ R
    beta = np.sqrt(w)
    Z = beta[:, None] * R - np.outer(beta, E)
    return E, RiskPanel(Z, float(np.linalg.norm(Z)))


def pivoted_qr(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder QR with column pivoting; returns ``(R, perm)``.

    ``R`` is min(M, n) x n upper trapezoidal with ``A[:, perm] = Q R``.
    The pivot is the remaining column of largest norm, ties to the lowest index.
    """
    R = np.array(A, dtype=float, copy=True)
    M, n = R.shape
    perm = np.arange(n)
    k_max = min(M, n)
    for k in range(k_max):
        norms = np.linalg.norm(R[k:, k:], axis=0)
        j = k + int(np.argmax(norms))
        if j != k:
            R[:, [k, j]] = R[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
        x = R[k:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vv = v @ v
        if vv == 0.0:
            continue
        R[k:, k:] -= np.outer(v, (2.0 / vv) * (v @ R[k:, k:]))
        R[k + 1:, k] = 0.0
    return R[:k_max], perm


def truncate_rank(F: np.ndarray, eps_z: float) -> np.ndarray:
    """Drop trailing rows whose norm (from the diagonal on) is at most ``eps_z``."""
    m = F.shape[0]
    while m > 1 and np.linalg.norm(F[m - 1, m - 1:]) <= eps_z:
        m -= 1
    return F[:m].copy()


def difference_first_row(F: np.ndarray) -> np.ndarray:
    """Columns 2..n become differences ``y_j - y_1`` of the base column."""
    F = F.copy()
    F[0, 1:] -= F[0, 0]
    return F


def givens_retriangularize(F: np.ndarray) -> np.ndarray:
    """Zero the subdiagonal of the Hessenberg block ``F[:, 1:]``.

    Rotation ``j`` acts on rows ``j-1, j`` and kills ``F[j, j]``; column 0 is
    carried along, so the last row ends up holding only the component
    orthogonal to the tangent space (plus any columns beyond the rank).
    """
    F = F.copy()
    m = F.shape[0]
    for j in range(1, m):
        a, b = F[j - 1, j], F[j, j]
        r = np.hypot(a, b)
        if r == 0.0:
            continue
        c, s = a / r, b / r
        G = np.array([[c, s], [-s, c]])
        F[j - 1:j + 1, 0] = G @ F[j - 1:j + 1, 0]
        F[j - 1:j + 1, j:] = G @ F[j - 1:j + 1, j:]
        F[j, j] = 0.0
    return F


def extract_systemic(F: np.ndarray, eps_z: float) -> tuple[np.ndarray, float]:
    """Systemic risk from the last row when it is orthogonal to the tangent space."""
    m = F.shape[0]
    if np.linalg.norm(F[m - 1, m:]) <= eps_z:
        return F[:m - 1].copy(), float(abs(F[m - 1, 0]))
    return F.copy(), 0.0


@dataclass(frozen=True)
class Gradient:
    """Coordinates of the expected-return gradient in the current basis.

    ``anchored`` marks that ``F`` was already re-anchored to ``y_j - y_0``
    (the least-squares branch does this before solving).
    """

    g: np.ndarray
    e0: float
    eF: float
    eflag: bool
    F: np.ndarray
    anchored: bool


def solve_gradient(F: np.ndarray, E_perm: np.ndarray) -> Gradient:
    """Exact gradient solve, falling back to least squares about the mean.

    ``F ~ [y1 - y0, y2 - y1, ..., yn - y1]`` on entry, ``E_perm`` the
    expected returns in the same column order.
    """
    e1 = E_perm[0]
    B = E_perm[1:] - e1
    A = F[:, 1:].T
    g = np.linalg.lstsq(A, B, rcond=None)[0]
    nB = np.linalg.norm(B)
    eflag = bool(np.linalg.norm(A @ g - B) > EPS0 * nB)
    if not eflag:
        return Gradient(g, float(e1 - g @ F[:, 0]), float(np.linalg.norm(g)), False, F.copy(), False)
    F = F.copy()
    F[:, 1:] += F[:, [0]]
    v = F.mean(axis=1)
    G = F - v[:, None]
    emean = E_perm.mean()
    C = E_perm - emean
    g = np.linalg.lstsq(G.T, C, rcond=None)[0]
    return Gradient(g, float(emean - g @ v), float(np.linalg.norm(g)), True, F, True)


def householder_align(F: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Reflect the basis so ``g`` lies along the first axis with positive sign."""
    norm_g = np.linalg.norm(g)
    if norm_g == 0.0:
        return F.copy()
    alpha = -norm_g if g[0] >= 0 else norm_g
    v = g.astype(float).copy()
    v[0] -= alpha
    out = F - np.outer(v, (2.0 / (v @ v)) * (v @ F))
    # H g = alpha * e1; flip the productive row so the gradient coordinate is +|g|.
    if alpha < 0:
        out[0] = -out[0]
    return out


def reanchor(F: np.ndarray) -> np.ndarray:
    """``[y1 - y0, y2 - y1, ...]`` to ``[y1 - y0, y2 - y0, ...]``."""
    F = F.copy()
    F[:, 1:] += F[:, [0]]
    return F


def principal_rows(F: np.ndarray) -> np.ndarray:
    """Replace the rows of ``F`` by ``S V'`` from its compact SVD."""
    _, s, Vt = np.linalg.svd(F, full_matrices=False)
    k = min(F.shape)
    return s[:k, None] * Vt[:k]


# -- driver -------------------------------------------------------------------

def _is_constant(values: np.ndarray) -> bool:
    lo, hi = float(values.min()), float(values.max())
    return hi - lo <= EPS0 * max(abs(lo), abs(hi))


def decompose_returns(
    R,
    weights=None,
    rho: float = 1.0,
    tickers: Sequence[str] | None = None,
) -> Decomposition:
    """Decompose an M x n return matrix; see :func:`decompose`."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if tickers is None:
        tickers = [f"S{j + 1}" for j in range(R.shape[1])]
    return decompose(ReturnPanel(R, tuple(tickers), weights, rho))


def decompose(panel: ReturnPanel) -> Decomposition:
    """Split the panel's risk into systemic, productive and nonproductive parts."""
    R = panel.returns
    n = panel.n
    w = panel.omega()
    rho = panel.rho
    sr = np.sqrt(rho)
    tickers = panel.tickers

    E, rp = risk_panel(R, w)
    eps_z = EPS0 * rp.sigZ

    F, J = pivoted_qr(rp.Z)
    F = truncate_rank(F, eps_z)
    m = F.shape[0]
    Jinv = np.argsort(J)

    if n == 1:
        return Decomposition(E * rho, np.zeros((1, 1)), abs(F[0, 0]) * sr, E[0] * rho,
                             0.0, False, tickers, rho)
    if m == 1 and _is_constant(F[0]):
        return _single_point(E, F[0], rho, tickers)

    E_perm = E[J]
    F = difference_first_row(F)
    F = givens_retriangularize(F)
    F, f0 = extract_systemic(F, eps_z)
    if F.shape[0] == 0:
        # Every risk vector coincides within eps_z, though not within the
        # relative tolerance of the rank-one check above.
        return _single_point(E, np.full(n, f0), rho, tickers)

    if _is_constant(E):
        F = principal_rows(reanchor(F)[:, Jinv])
        return Decomposition(E * rho, F * sr, f0 * sr, E.mean() * rho, 0.0, False, tickers, rho)

    grad = solve_gradient(F, E_perm)
    F = grad.F
    if grad.eF == 0.0:
        # Gradient vanished in the least-squares branch: no productive direction.
        if not grad.anchored:
            F = reanchor(F)
        F = principal_rows(F[:, Jinv])
        return Decomposition(E * rho, F * sr, f0 * sr, grad.e0 * rho, 0.0, grad.eflag,
                             tickers, rho)
    F = householder_align(F, grad.g)
    if not grad.anchored:
        F = reanchor(F)
    if F.shape[0] > 1:
        F[1:] = principal_rows(F[1:])
    F = F[:, Jinv]
    return Decomposition(E * rho, F * sr, f0 * sr, grad.e0 * rho, grad.eF * sr,
                         grad.eflag, tickers, rho)


def _single_point(E, row, rho, tickers) -> Decomposition:
    """All risk vectors coincide: the Z-flat is one point at distance f0."""
    n = E.shape[0]
    fmin, fmax = float(np.min(row)), float(np.max(row))
    e0 = float(E.mean())
    ee = float(E @ E)
    eflag = ee - n * e0 * e0 > EPS0 * ee
    f0 = abs((fmin + fmax) / 2)
    return Decomposition(E * rho, np.zeros((1, n)), f0 * np.sqrt(rho), e0 * rho, 0.0,
                         eflag, tickers, rho)


# -- derived quantities ---------------------------------------------------------

def approx_expected(d: Decomposition) -> np.ndarray:
    """``e0 + eF * F[0]``: equals E unless eflag is set."""
    return d.e0 + d.eF * d.F[0]


def reconstruct_covariance(d: Decomposition) -> np.ndarray:
    """``f0**2 + F' F`` with the scalar added to every entry."""
    return d.f0 ** 2 + d.F.T @ d.F
