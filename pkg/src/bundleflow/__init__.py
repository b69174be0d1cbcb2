"""Numerical laboratory for Ricci flow of invariant metrics on principal torus bundles."""

__version__ = "0.1.0"

from .errors import (BlowupTime, BundleFlowError, ChartMismatch, ConfigError,
                     DimensionMismatch, DomainError, EmptyInput, LambdaZero,
                     NegativeBase, SingularMetric, StepRejected, StepUnderflow,
                     TraceIoError, TraceParseError)

__all__ = [
    "__version__",
    "BlowupTime", "BundleFlowError", "ChartMismatch", "ConfigError",
    "DimensionMismatch", "DomainError", "EmptyInput", "LambdaZero",
    "NegativeBase", "SingularMetric", "StepRejected", "StepUnderflow",
    "TraceIoError", "TraceParseError",
]
