"""Gauss-Legendre panel quadrature used by the population-value layer."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError

#: Gauss-Legendre nodes per panel.  16 is enough to resolve half a period of
#: the oscillatory Bessel kernels per panel with ~1e-12 relative accuracy.
PANEL_ORDER = 16


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls the frequency-space integration of population quantities.

    cutoff: truncation radius in frequency space (model tails beyond this
        radius are dropped; choose it from the model's analytic decay).
    panels: number of equal-width panels on [0, cutoff].
    tol: self-convergence / truncation tolerance.
    """

    cutoff: float
    panels: int = 128
    tol: float = 1e-6

    def __post_init__(self):
        if not (self.cutoff > 0 and np.isfinite(self.cutoff)):
            raise ConfigurationError(f"cutoff must be positive, got {self.cutoff}")
        if self.panels < 1:
            raise ConfigurationError(f"panels must be >= 1, got {self.panels}")
        if not (self.tol > 0):
            raise ConfigurationError(f"tol must be positive, got {self.tol}")


@lru_cache(maxsize=8)
def _gl_base(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def panel_rule(lo: float, hi: float, panels: int, order: int = PANEL_ORDER):
    """Composite Gauss-Legendre rule on [lo, hi] with equal-width panels.

    Returns (nodes, weights) as flat arrays of length panels*order.
    """
    base_x, base_w = _gl_base(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights


def integrate_1d(func, lo: float, hi: float, panels: int, order: int = PANEL_ORDER):
    """Integrate a vectorized scalar function over [lo, hi]."""
    nodes, weights = panel_rule(lo, hi, panels, order)
    return float(np.dot(weights, func(nodes)))


def angular_nodes(count: int):
    """Equally spaced angles on [0, 2π) with uniform trapezoid weight 2π/count.

    The trapezoid rule is spectrally accurate for smooth periodic integrands,
    which covers every angular integral in this package.
    """
    theta = np.arange(count) * (2.0 * np.pi / count)
    return theta, 2.0 * np.pi / count
