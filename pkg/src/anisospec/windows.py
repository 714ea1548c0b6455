"""Data tapers, their normalizing coefficients, and frequency windows.

A taper h lives on [-1/2, 1/2]^d as a product of identical 1-D windows.
Everything downstream needs three things from it: pointwise values h(s),
the Fourier coefficients H(m) of h^2 (which normalize the periodogram and
the variance estimator), and the frequency window B(u) (diagnostics only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Rectangular:
    """Untapered window: h = 1 on the support.

    Provided for contrast experiments only — the test pipeline refuses it
    (see estimators.isotropy_test) because in dimension >= 2 the edge-effect
    bias of the untapered DFT is not asymptotically negligible.
    """


@dataclass(frozen=True)
class CosinePower:
    """h(s) = prod_i cos^alpha(pi s_i) on [-1/2, 1/2]^d.

    alpha >= 3 gives a twice continuously differentiable window (value and
    first two derivatives vanish at the support boundary), which is what the
    distribution theory of the test statistic requires.
    """

    alpha: int

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")


Taper = Union[Rectangular, CosinePower]


def taper_eval(taper: Taper, s) -> np.ndarray:
    """Evaluate h at points ``s`` (shape (..., d)); zero outside the support.

    Returns an array of shape ``s.shape[:-1]`` (a scalar array for a single
    point).
    """
    s = np.asarray(s, dtype=np.float64)
    inside = np.all(np.abs(s) <= 0.5, axis=-1)
    if isinstance(taper, Rectangular):
        return inside.astype(np.float64)
    vals = np.prod(np.cos(np.pi * s) ** taper.alpha, axis=-1)
    return np.where(inside, vals, 0.0)


def h_coefficient_1d(taper: Taper, m: int) -> float:
    """1-D coefficient H(m) = ∫_{-1/2}^{1/2} h^2(s) e^{-2πi m s} ds.

    For the cosine-power window the integrand cos^{2α}(πs) has exact
    bandwidth α, so the coefficient is the binomial C(2α, α-|m|)/4^α for
    |m| <= α and exactly 0 beyond.  These are dyadic rationals, hence exact
    in double precision.
    """
    m = abs(int(m))
    if isinstance(taper, Rectangular):
        return 1.0 if m == 0 else 0.0
    a = taper.alpha
    if m > a:
        return 0.0
    return math.comb(2 * a, a - m) / float(4**a)


def h_coefficient(taper: Taper, m) -> float:
    """H_d(m) for an integer multi-index m: the product of the 1-D factors."""
    out = 1.0
    for mi in np.atleast_1d(np.asarray(m, dtype=np.int64)):
        out *= h_coefficient_1d(taper, int(mi))
    return out


def h_moment_ratio_sum(taper: Taper, power: int, m_cutoff: int = 64) -> float:
    """Σ_{m ∈ Z} (H(m)/H(0))^power over the 1-D index, truncated at |m| <= m_cutoff.

    Exact for cosine-power tapers once m_cutoff >= alpha.  The 2-D sum over
    multi-indices factorizes as the square of this value.
    """
    h0 = h_coefficient_1d(taper, 0)
    total = 1.0
    for m in range(1, m_cutoff + 1):
        total += 2.0 * (h_coefficient_1d(taper, m) / h0) ** power
    return total


def _sinc(x: np.ndarray) -> np.ndarray:
    """sin(x)/x with the removable singularity filled in."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


def frequency_window_1d(taper: Taper, lam: float, u) -> np.ndarray:
    """B_1(u) = ∫_{-λ/2}^{λ/2} h(s/λ) e^{-i s u} ds (real by symmetry).

    Closed form: the cosine power expands into complex exponentials, so each
    1-D factor is a finite sum of shifted sinc terms; the rectangular window
    is a single sinc.
    """
    if lam <= 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    u = np.asarray(u, dtype=np.float64)
    if isinstance(taper, Rectangular):
        return lam * _sinc(0.5 * lam * u)
    a = taper.alpha
    out = np.zeros_like(u)
    for j in range(a + 1):
        shift = 0.5 * np.pi * (a - 2 * j)
        out = out + math.comb(a, j) * _sinc(shift - 0.5 * lam * u)
    return (lam / 2.0**a) * out


def frequency_window(taper: Taper, lam: float, u) -> float:
    """B_d(u) for a d-vector u: the product of 1-D frequency windows."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    return float(np.prod(frequency_window_1d(taper, lam, u)))
