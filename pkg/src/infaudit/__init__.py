"""Membership and attribute inference evaluation for small tabular classifiers."""

__version__ = "0.1.0"
