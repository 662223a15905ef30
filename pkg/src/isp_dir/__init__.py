"""Degradation-independent representation learning for ISP-generated images."""

__version__ = "0.1.0"
