"""Trotter-Suzuki product formulas with Lie-algebraic error budgets."""

from . import algebra, bounds, cases, numerics, suzuki

__version__ = "0.1.0"

__all__ = ["algebra", "bounds", "cases", "numerics", "suzuki"]
