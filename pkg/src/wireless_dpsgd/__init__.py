"""Wireless D-PSGD: channel model, gossip matrices, rate optimization, training."""
from ._backend import DEFAULT as SEARCH_BACKEND

__version__ = "0.1.0"

__all__ = ["SEARCH_BACKEND", "__version__"]
