"""Tropical semiring over costs (negative natural-log probabilities).

Weights are plain floats. Lower is better: plus selects the cheaper of
two alternatives, times accumulates along a path.
"""

import math

ZERO = math.inf  # annihilator: an impossible path
ONE = 0.0  # identity: a free transition


def plus(a: float, b: float) -> float:
    """Semiring addition: min of two costs."""
    return a if a <= b else b


def times(a: float, b: float) -> float:
    """Semiring multiplication: sum of two costs."""
    return a + b


def approx_equal(a: float, b: float, tol: float = 1e-9) -> bool:
    """Cost equality with tolerance; infinities compare exactly."""
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= tol
