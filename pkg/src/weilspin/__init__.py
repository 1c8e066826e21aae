"""Exact engine for Weil classes on abelian varieties with CM by K = F(sqrt -q)."""

__version__ = "0.1.0"
