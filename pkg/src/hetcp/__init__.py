"""Heterogeneous multitype contact process on a chessboard habitat."""

__version__ = "0.1.0"
