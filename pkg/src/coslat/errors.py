"""Exception types shared across the package."""

import numpy as np


class EvaluationError(ArithmeticError):
    """An integrand returned a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = None if point is None else np.asarray(point, dtype=float)


class UnsupportedError(NotImplementedError):
    """The requested (measure, integrand) pairing has no oracle."""


class TruncationError(ValueError):
    """A truncated infinite sum has a tail estimate above the allowed fraction."""


def check_finite(values, points):
    """Raise :class:`EvaluationError` naming the first non-finite evaluation."""
    values = np.asarray(values, dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = int(np.flatnonzero(bad.ravel())[0])
        pt = np.asarray(points)[idx]
        raise EvaluationError(f"integrand is not finite at {pt.tolist()}", point=pt)
    return values
