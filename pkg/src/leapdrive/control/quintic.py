"""Quintic polynomials fixed by position, velocity and acceleration at both ends."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuinticPoly:
    coeffs: tuple[float, float, float, float, float, float]
    T: float

    def __call__(self, t, order: int = 0):
        """Value (``order=0``) or time derivative of the given order at ``t``."""
        c = np.polynomial.polynomial.polyder(np.asarray(self.coeffs), order) if order else np.asarray(self.coeffs)
        return np.polynomial.polynomial.polyval(t, c)

    def position(self, t):
        return self(t, 0)

    def velocity(self, t):
        return self(t, 1)

    def acceleration(self, t):
        return self(t, 2)

    def jerk(self, t):
        return self(t, 3)


def quintic_solve(x0: float, v0: float, a0: float, xT: float, vT: float, aT: float, T: float) -> QuinticPoly:
    if not T > 0:
        raise ValueError(f"duration T must be positive, got {T}")
    # solve on normalised time tau = t / T, which keeps the system well conditioned
    v0n, a0n, vTn, aTn = v0 * T, a0 * T * T, vT * T, aT * T * T
    c0, c1, c2 = x0, v0n, a0n / 2.0
    b = np.array([xT - c0 - c1 - c2, vTn - c1 - 2.0 * c2, aTn - 2.0 * c2])
    c3, c4, c5 = np.linalg.solve(_NORMALISED, b)
    scaled = [c / T**k for k, c in enumerate((c0, c1, c2, c3, c4, c5))]
    return QuinticPoly(tuple(float(c) for c in scaled), float(T))


_NORMALISED = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
