"""Random return panels for property tests, including degenerate shapes."""
from __future__ import annotations

import numpy as np

KINDS = ("generic", "low_rank", "duplicate", "constant_col", "offset", "equal_mean")


def random_panel(rng: np.random.Generator, M: int, n: int, kind: str = "generic"):
    """Return ``(R, w, rho)``; ``kind`` injects a structural degeneracy."""
    R = rng.normal(size=(M, n)) * rng.uniform(0.5, 20) + rng.normal(size=n) * 3
    if kind == "low_rank" and n > 1 and M > 1:
        r = int(rng.integers(1, min(M, n) + 1))
        R = rng.normal(size=(M, r)) @ rng.normal(size=(r, n)) * 5
    elif kind == "duplicate" and n > 1:
        R[:, n - 1] = R[:, 0]
    elif kind == "constant_col":
        R[:, int(rng.integers(n))] = rng.normal()
    elif kind == "offset" and n > 1:
        R[:, 1] = R[:, 0] + 0.5           # same risk vector, different mean
    elif kind == "equal_mean":
        w0 = rng.uniform(0.1, 1, M)
        w0 /= w0.sum()
        R -= w0 @ R
        R += 2.0
        return R, w0, float(rng.choice([1.0, 4.0, 12.0, 252.0]))
    w = rng.uniform(0.1, 1, M) if rng.random() < 0.7 else np.ones(M)
    rho = float(rng.choice([1.0, 4.0, 12.0, 52.0, 252.0]))
    return R, w, rho
