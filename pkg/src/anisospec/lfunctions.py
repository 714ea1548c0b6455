"""Logarithmic bound kernels and numerical checks of their closure rules.

The frequency window B of a smooth taper is bounded (up to constants) by the
piecewise kernel L below; convolutions and lattice sums of such kernels
close under the family with the order bumped by one.  The two ``verify_*``
routines compute the left-hand sides numerically and return the worst-case
ratio against the bumped kernel, so a property test can assert the ratio is
uniformly bounded (the closure constants are non-constructive, so only
boundedness is checkable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConfigurationError


@dataclass(frozen=True)
class LFunctionParams:
    s: int
    lam: float

    def __post_init__(self):
        if self.s < 0 or int(self.s) != self.s:
            raise ConfigurationError(f"order s must be a nonnegative integer, got {self.s}")
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")


def _plateau(s: int) -> float:
    """(s/e)^s with the s=0 convention 0^0 = 1."""
    return 1.0 if s == 0 else (s / math.e) ** s


def l_function(params: LFunctionParams, u) -> np.ndarray:
    """L^{(s)}_λ(u): plateau (s/e)^s·λ for |u| ≤ e^s/λ, else log^s(λ|u|)/|u|.

    Continuous at the branch point; strictly positive everywhere.
    Vectorized over ``u``; returns a scalar for scalar input.
    """
    s, lam = params.s, params.lam
    u = np.abs(np.asarray(u, dtype=np.float64))
    knee = math.exp(s) / lam
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tail = np.log(lam * u) ** s / u
    out = np.where(u <= knee, _plateau(s) * lam, tail)
    if out.ndim == 0:
        return float(out)
    return out


def ell_function(s: int, u) -> np.ndarray:
    """ℓ^{(s)}(u): the λ-free version, equal to L^{(s)}_λ(u/λ)/λ for every λ."""
    if s < 0:
        raise ConfigurationError(f"order s must be nonnegative, got {s}")
    u = np.abs(np.asarray(u, dtype=np.float64))
    knee = math.exp(s)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tail = np.log(u) ** s / u
    out = np.where(u <= knee, _plateau(s), tail)
    if out.ndim == 0:
        return float(out)
    return out


def verify_l_convolution(p: int, q: int, lam: float, v_grid) -> float:
    """max over v of  [∫ L^{(p)}(u) L^{(q)}(v−u) du] / L^{(p+q+1)}(v).

    The integral is evaluated piecewise between the kernels' branch points
    (plus infinite tails); a uniformly bounded return value over v and λ
    choices is the numerical content of the closure rule.
    """
    if p > 2 or q > 2:
        raise ConfigurationError("convolution check supports p, q <= 2")
    par_p = LFunctionParams(p, lam)
    par_q = LFunctionParams(q, lam)
    par_pq = LFunctionParams(p + q + 1, lam)
    worst = 0.0
    for v in np.atleast_1d(np.asarray(v_grid, dtype=np.float64)):
        breaks = sorted(
            {
                -math.exp(p) / lam,
                math.exp(p) / lam,
                v - math.exp(q) / lam,
                v + math.exp(q) / lam,
            }
        )

        def integrand(u, _v=v):
            return l_function(par_p, u) * l_function(par_q, _v - u)

        total = 0.0
        total += integrate.quad(integrand, -np.inf, breaks[0], limit=200)[0]
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            total += integrate.quad(integrand, lo, hi, limit=200)[0]
        total += integrate.quad(integrand, breaks[-1], np.inf, limit=200)[0]
        worst = max(worst, total / l_function(par_pq, v))
    return worst


def _integer_sum_tail_bound(p: int, q: int, m_max: int) -> float:
    """Upper bound for the dropped |m| > m_max terms of the lattice sum.

    Termwise, ℓ^{(p)}(m)ℓ^{(q)}(m+r) ≤ log^{p+q}(2|m|)/m² once |m| exceeds
    both e^p+|r| and e^q, and ∫_M^∞ log^k(2x)/x² dx = (1/M)Σ_{i≤k} (k!/i!)·
    log^i(2M).  Factor 2 covers both half-axes.
    """
    k = p + q
    log_term = math.log(2.0 * m_max)
    integral = sum(
        math.factorial(k) / math.factorial(i) * log_term**i for i in range(k + 1)
    ) / m_max
    return 2.0 * integral


def verify_l_sum(p: int, q: int, r_grid, m_max: int = 10**6) -> float:
    """max over r of  [Σ_{|m| ≤ m_max} ℓ^{(p)}(m) ℓ^{(q)}(m+r)] / ℓ^{(p+q+1)}(r),
    with the truncation tail added to the numerator as a conservative bound."""
    if p > 2 or q > 2:
        raise ConfigurationError("lattice-sum check supports p, q <= 2")
    m = np.arange(-m_max, m_max + 1, dtype=np.float64)
    ell_p = ell_function(p, m)
    tail = _integer_sum_tail_bound(p, q, m_max)
    worst = 0.0
    for r in np.atleast_1d(np.asarray(r_grid)):
        total = float(np.dot(ell_p, ell_function(q, m + float(r)))) + tail
        worst = max(worst, total / ell_function(p + q + 1, float(r)))
    return worst
