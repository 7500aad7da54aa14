import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from riskdecomp.decomp import Decomposition  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture
def example1():
    """Three securities A, B, C with F = [[-4, 2, 4], [2, -2, 3]] and E = 5 + x/2."""
    F = np.array([[-4.0, 2.0, 4.0], [2.0, -2.0, 3.0]])
    return Decomposition(E=5 + 0.5 * F[0], F=F, f0=0.0, e0=5.0, eF=0.5, eflag=False,
                         tickers=("A", "B", "C"))
