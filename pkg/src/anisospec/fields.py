"""Covariance models, sampling design, and Gaussian field simulation.

Two stationary models on R^2, both with unit marginal variance:

* ``GaussianAniso(r)``: c(h) = exp(-4 ||A_r h||^2) with A_r the composition
  of a 45-degree rotation and a 1/r shrink of the second coordinate.  r = 1
  is isotropic; r > 1 stretches the correlation range along the rotated
  axis.
* ``Matern(nu, ell)``: the Matérn kernel, isotropic for every parameter
  choice.

Spectral densities follow the convention f(omega) = ∫ c(h) e^{-i omega·h} dh
(inverse transform carries the (2π)^{-d}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import gamma as _gamma_fn
from scipy.special import kv as _bessel_kv

from .errors import ConfigurationError, NumericalError

_ROT45 = np.array(
    [
        [math.cos(math.pi / 4), math.sin(math.pi / 4)],
        [-math.sin(math.pi / 4), math.cos(math.pi / 4)],
    ]
)

#: Diagonal loading levels (in units of c(0)) tried in order when the
#: covariance matrix fails Cholesky.
JITTER_LADDER = (1e-10, 1e-8, 1e-6)


@dataclass(frozen=True)
class GaussianAniso:
    """Gaussian (squared-exponential) kernel with anisotropy ratio ``r``."""

    r: float = 1.0

    def __post_init__(self):
        if not (self.r > 0 and np.isfinite(self.r)):
            raise ConfigurationError(f"anisotropy ratio must be positive, got {self.r}")


@dataclass(frozen=True)
class Matern:
    """Matérn kernel with smoothness ``nu`` and length scale ``ell``."""

    nu: float = 3.0
    ell: float = 1.0

    def __post_init__(self):
        if not (self.nu > 0 and np.isfinite(self.nu)):
            raise ConfigurationError(f"nu must be positive, got {self.nu}")
        if not (self.ell > 0 and np.isfinite(self.ell)):
            raise ConfigurationError(f"ell must be positive, got {self.ell}")


CovarianceModel = Union[GaussianAniso, Matern]


@dataclass(frozen=True)
class Seed:
    """Counter-based RNG key: (seed, stream) -> independent Philox stream.

    Identical (seed, stream) reproduces identical output bit-for-bit;
    distinct streams are statistically independent, which is how the Monte
    Carlo harness parallelizes without sharing generator state.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name, value in (("seed", self.seed), ("stream", self.stream)):
            if not (0 <= value < 2**64):
                raise ConfigurationError(f"{name} must fit in uint64, got {value}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SpatialSample:
    """Irregularly sampled field: locations in [-lam/2, lam/2]^2 and values."""

    lam: float
    locations: np.ndarray
    values: np.ndarray
    n: int
    jitter: Optional[float] = None

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=np.float64)
        val = np.asarray(self.values, dtype=np.float64)
        if loc.ndim != 2 or loc.shape[1] != 2:
            raise ConfigurationError(f"locations must be n×2, got shape {loc.shape}")
        if val.shape != (loc.shape[0],):
            raise ConfigurationError(
                f"values length {val.shape} does not match {loc.shape[0]} locations"
            )
        if self.n != loc.shape[0]:
            raise ConfigurationError(f"n={self.n} but {loc.shape[0]} locations given")
        if not (self.lam > 0):
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")
        half = 0.5 * self.lam
        if loc.size and np.abs(loc).max() > half * (1 + 1e-12):
            raise ConfigurationError("locations fall outside [-lambda/2, lambda/2]^2")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "values", val)


def anisotropy_matrix(r: float) -> np.ndarray:
    """A_r = diag(1, 1/r) · R(π/4); ||A_r h|| is the metric inside the kernel."""
    return np.diag([1.0, 1.0 / r]) @ _ROT45


def covariance_eval(model: CovarianceModel, lags) -> np.ndarray:
    """c(h) for lag vectors ``lags`` of shape (..., 2).

    Returns an array of shape ``lags.shape[:-1]``.
    """
    lags = np.asarray(lags, dtype=np.float64)
    if not np.all(np.isfinite(lags)):
        raise ConfigurationError("lag vectors must be finite")
    if isinstance(model, GaussianAniso):
        metric = lags @ anisotropy_matrix(model.r).T
        return np.exp(-4.0 * np.sum(np.square(metric), axis=-1))
    dist = np.sqrt(np.sum(np.square(lags), axis=-1))
    return _matern_radial(model, dist)


def _matern_radial(model: Matern, dist: np.ndarray) -> np.ndarray:
    nu, ell = model.nu, model.ell
    x = math.sqrt(2.0 * nu) / ell * np.asarray(dist, dtype=np.float64)
    const = 2.0 ** (1.0 - nu) / _gamma_fn(nu)
    with np.errstate(invalid="ignore", over="ignore"):
        vals = const * np.power(x, nu) * _bessel_kv(nu, x)
    # x -> 0 gives 0 * inf; the kernel's limit there is the variance, 1.
    return np.where(x > 0, np.nan_to_num(vals, nan=0.0, posinf=0.0), 1.0)


def spectral_density(model: CovarianceModel, freqs) -> np.ndarray:
    """f(omega) for frequency vectors ``freqs`` of shape (..., 2)."""
    freqs = np.asarray(freqs, dtype=np.float64)
    if isinstance(model, GaussianAniso):
        # FT of the Gaussian kernel under the A_r metric:
        #   f(omega) = (π r / 4) exp(-||A_r^{-T} omega||^2 / 16).
        inv_t = np.linalg.inv(anisotropy_matrix(model.r)).T
        metric = freqs @ inv_t.T
        return (
            np.pi
            * model.r
            / 4.0
            * np.exp(-np.sum(np.square(metric), axis=-1) / 16.0)
        )
    return _matern_spectral_radial(model, np.sqrt(np.sum(np.square(freqs), axis=-1)))


def _matern_spectral_radial(model: Matern, radii) -> np.ndarray:
    """Radial profile of the Matérn spectral density (d = 2)."""
    nu, ell = model.nu, model.ell
    u2 = np.square(np.asarray(radii, dtype=np.float64))
    const = 4.0 * np.pi * nu * (2.0 * nu) ** nu / ell ** (2.0 * nu)
    return const * (2.0 * nu / ell**2 + u2) ** (-(nu + 1.0))


def sample_locations(n: int, lam: float, seed: Seed) -> np.ndarray:
    """n i.i.d. locations, uniform on [-lam/2, lam/2]^2, deterministic in seed."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    if not (lam > 0):
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    gen = seed.generator()
    return gen.uniform(-0.5 * lam, 0.5 * lam, size=(n, 2))


def covariance_matrix(model: CovarianceModel, locations: np.ndarray) -> np.ndarray:
    """Dense covariance matrix c(s_i - s_j), built in row blocks to bound
    temporary memory at large n."""
    loc = np.asarray(locations, dtype=np.float64)
    n = loc.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    block = max(1, min(n, 4_000_000 // max(n, 1)))
    if isinstance(model, GaussianAniso):
        metric = loc @ anisotropy_matrix(model.r).T
        sq = np.einsum("ij,ij->i", metric, metric)
        for lo in range(0, n, block):
            hi = min(lo + block, n)
            g = metric[lo:hi] @ metric.T
            g *= -2.0
            g += sq[lo:hi, None]
            g += sq[None, :]
            np.maximum(g, 0.0, out=g)
            g *= -4.0
            np.exp(g, out=g)
            out[lo:hi] = g
    else:
        sq = np.einsum("ij,ij->i", loc, loc)
        for lo in range(0, n, block):
            hi = min(lo + block, n)
            g = loc[lo:hi] @ loc.T
            g *= -2.0
            g += sq[lo:hi, None]
            g += sq[None, :]
            np.maximum(g, 0.0, out=g)
            np.sqrt(g, out=g)
            out[lo:hi] = _matern_radial(model, g)
    np.fill_diagonal(out, 1.0)
    return out


def simulate_field(
    model: CovarianceModel, locations: np.ndarray, lam: float, seed: Seed
) -> SpatialSample:
    """Draw one centered Gaussian field at the given locations.

    Uses dense Cholesky of the covariance with escalating diagonal loading
    eps ∈ {1e-10, 1e-8, 1e-6}·c(0); the loading actually used is recorded in
    the returned sample's ``jitter`` field.
    """
    loc = np.asarray(locations, dtype=np.float64)
    n = loc.shape[0]
    if n < 1:
        raise ConfigurationError("at least one location is required")
    chol = None
    used = None
    for eps in JITTER_LADDER:
        sigma = covariance_matrix(model, loc)
        idx = np.diag_indices(n)
        sigma[idx] += eps
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            del sigma
            continue
        used = eps
        del sigma
        break
    if chol is None:
        raise NumericalError(
            f"covariance matrix of {n} locations is not positive definite even "
            f"with diagonal loading up to {JITTER_LADDER[-1]}"
        )
    gen = seed.generator()
    values = chol @ gen.standard_normal(n)
    return SpatialSample(lam=lam, locations=loc, values=values, n=n, jitter=used)
