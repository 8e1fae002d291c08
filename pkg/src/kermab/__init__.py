"""Distributed kernelized bandits with running consensus."""

__version__ = "0.1.0"
