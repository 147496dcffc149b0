"""Distributional ground truth quality control for crowdsourced UI labeling.

Workers are scored by how closely their class-frequency distribution matches
the distributions produced by a small set of trusted labelers, using the
two-sample Kolmogorov-Smirnov test. The resulting averaged p-values predict
each worker's acceptance rate without any redundant labeling.
"""

from dgtqc.errors import (
    ArgumentError,
    BoxIndexError,
    ConflictError,
    DegenerateError,
    DgtError,
    FieldError,
    GeometryError,
    InstabilityError,
    InsufficientTailError,
    ParseError,
    UnknownReferenceError,
    SingularityError,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BoxIndexError",
    "ConflictError",
    "DegenerateError",
    "DgtError",
    "FieldError",
    "GeometryError",
    "InstabilityError",
    "InsufficientTailError",
    "ParseError",
    "UnknownReferenceError",
    "SingularityError",
]
