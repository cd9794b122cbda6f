"""CEGIS over the proof language: term pools, lasso search and the two-sided driver."""
from .driver import Budget, Verdict, solve_gt
from .pool import TermPool

__all__ = ["Budget", "TermPool", "Verdict", "solve_gt"]
