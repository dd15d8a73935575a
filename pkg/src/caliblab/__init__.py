"""Desk-scale numerical certification toolkit for the minimality of Y x Y in R^4."""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
