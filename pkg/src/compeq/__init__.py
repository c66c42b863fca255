"""Computational games: finite games, commitments over an ideal permutation,
and empirical checks of how equilibria carry over to budgeted machines."""

__version__ = "0.1.0"
