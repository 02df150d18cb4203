"""Double-well potential with quadratic growth of the second derivative.

Default is the regular quartic F(r) = (r^2 - 1)^2 / 4, whose second
derivative 3 r^2 - 1 saturates the admissible growth |F''(r)| <= C1 (1 + r^2)
with C1 = 3.  Only polynomials of degree <= 4 with a nonnegative well shape
are accepted; steeper growth would break the bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_SAMPLE = np.linspace(-10.0, 10.0, 4001)


@dataclass(frozen=True)
class Potential:
    kind: str
    # coefficients of F in ascending powers, degree <= 4
    coefficients: tuple[float, ...]
    C1: float = 3.0

    def __post_init__(self):
        if len(self.coefficients) > 5:
            raise ValueError("potential must be a polynomial of degree <= 4")
        if not self.C1 > 0:
            raise ValueError("growth constant C1 must be positive")
        samples = self.f(_SAMPLE)
        if np.min(samples) < -1e-12:
            raise ValueError("potential must be nonnegative")

    def f(self, r):
        return np.polynomial.polynomial.polyval(r, self.coefficients)

    def df(self, r):
        c = np.polynomial.polynomial.polyder(self.coefficients)
        return np.polynomial.polynomial.polyval(r, c)

    def d2f(self, r):
        c = np.polynomial.polynomial.polyder(self.coefficients, 2)
        return np.polynomial.polynomial.polyval(r, c)

    def validate_growth(self) -> bool:
        """Sampled check of |F''(r)| <= C1 (1 + r^2) on [-10, 10]."""
        ratio = np.abs(self.d2f(_SAMPLE)) / (1.0 + _SAMPLE**2)
        return bool(np.max(ratio) <= self.C1 + 1e-12)


def regular_quartic(C1: float = 3.0) -> Potential:
    """F(r) = (r^2 - 1)^2 / 4, zeros at the pure phases r = +-1."""
    return Potential(kind="regular_quartic",
                     coefficients=(0.25, 0.0, -0.5, 0.0, 0.25), C1=C1)


def zero_potential() -> Potential:
    """F identically zero; used by linear test problems."""
    return Potential(kind="zero", coefficients=(0.0,), C1=1.0)
