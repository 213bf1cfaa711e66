"""Price bounds and Monte Carlo valuation for mortality catastrophe bonds."""

__version__ = "0.1.0"
