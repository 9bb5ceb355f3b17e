"""Typed-document information extraction pipelines with linear models."""

__version__ = "0.1.0"
