"""Orthogonal risk decomposition of security returns and portfolio paths."""
from .errors import NumericalError, ValidationError
from .ingest import (PricePanel, ReturnPanel, WeightSpec, linear_returns, make_weights,
                     normalize_prices, parse_prices, parse_returns, window_last)
from .decomp import Decomposition, covariance, decompose, decompose_returns, expected_returns
from .analysis import (Portfolio, parse_portfolio, project, risk_decomposition,
                       variance_breakdown)
from .optimizer import PathStats, PortfolioPath, min_abs_y_path, minvar_corners, path_stats

__version__ = "0.1.0"

__all__ = [
    "Decomposition", "NumericalError", "PathStats", "Portfolio", "PortfolioPath",
    "PricePanel", "ReturnPanel", "ValidationError", "WeightSpec", "covariance",
    "decompose", "decompose_returns", "expected_returns", "linear_returns", "make_weights",
    "min_abs_y_path", "minvar_corners", "normalize_prices", "parse_portfolio",
    "parse_prices", "parse_returns", "path_stats", "project", "risk_decomposition",
    "variance_breakdown", "window_last",
]
