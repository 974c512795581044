"""Sublinear Gronwall envelope and its verification against direct ODE integration.

For nonnegative A1, A2, A3 and m in (0, 1), any f with
f(t) <= A1 + A2 int f^m + A3 int f is dominated by

    bound(t) = e^{A3 t} (A1^{1-m} + (1-m) A2 t)^{1/(1-m)}.

The comparison ODE g' = A2 g^m + A3 g, g(0) = A1 saturates the inequality up
to the e^{A3 t} relaxation, so an accurate integration of g must stay at or
below the bound; verify_against_ode checks exactly that with classic RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GronwallCoeffs:
    A1: float
    A2: float
    A3: float
    m: float
    T: float

    def __post_init__(self):
        if min(self.A1, self.A2, self.A3) < 0.0:
            raise ValueError("A1, A2, A3 must be >= 0")
        if not (0.0 < self.m < 1.0):
            raise ValueError("m must lie in (0, 1)")
        if self.T <= 0.0:
            raise ValueError("T must be > 0")


def gronwall_bound(c: GronwallCoeffs, t: float) -> float:
    """e^{A3 t} (A1^{1-m} + (1-m) A2 t)^{1/(1-m)} for t in (0, T)."""
    if not (0.0 < t < c.T):
        raise ValueError(f"t={t} outside (0, T={c.T})")
    return _bound_values(c, np.asarray([t]))[0]


def _bound_values(c: GronwallCoeffs, t: np.ndarray) -> np.ndarray:
    base = (0.0 if c.A1 == 0.0 else c.A1 ** (1.0 - c.m)) + (1.0 - c.m) * c.A2 * t
    return np.exp(c.A3 * t) * base ** (1.0 / (1.0 - c.m))


def integrate_comparison_ode(A1, A2, A3, m, T: float, n_steps: int):
    """Vectorized RK4 for g' = A2 g^m + A3 g, g(0) = A1 on [0, T].

    Coefficients may be scalars or equal-length arrays (a batch of ODEs
    advanced in lockstep).  Returns (times, g) with g of shape
    (n_steps + 1, batch).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    A1 = np.atleast_1d(np.asarray(A1, dtype=float))
    A2 = np.atleast_1d(np.asarray(A2, dtype=float))
    A3 = np.atleast_1d(np.asarray(A3, dtype=float))
    m = np.atleast_1d(np.asarray(m, dtype=float))
    h = T / n_steps
    if h <= 0.0 or not math.isfinite(h):
        raise ValueError("step size underflow")

    def rhs(g):
        return A2 * np.power(np.maximum(g, 0.0), m) + A3 * g

    g = A1.copy()
    out = np.empty((n_steps + 1, len(g)))
    out[0] = g
    for k in range(n_steps):
        k1 = rhs(g)
        k2 = rhs(g + 0.5 * h * k1)
        k3 = rhs(g + 0.5 * h * k2)
        k4 = rhs(g + h * k3)
        g = g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = g
    times = np.linspace(0.0, T, n_steps + 1)
    return times, out


@dataclass(frozen=True)
class GronwallReport:
    max_gap: float  # max over steps of g(t) - bound(t); <= 0 means dominated
    max_rel_gap: float
    n_steps: int


def verify_against_ode(c: GronwallCoeffs, n_steps: int = 2000) -> GronwallReport:
    """Integrate the comparison ODE and report the worst excess over the bound."""
    if n_steps < 100:
        raise ValueError("n_steps must be >= 100")
    times, g = integrate_comparison_ode(c.A1, c.A2, c.A3, c.m, c.T, n_steps)
    g = g[:, 0]
    bounds = _bound_values(c, times)
    gap = g - bounds
    rel = gap / np.maximum(1.0, bounds)
    k = int(np.argmax(rel))
    return GronwallReport(max_gap=float(gap[k]), max_rel_gap=float(rel[k]), n_steps=n_steps)
