"""Frequency grids and the tapered spatial DFT.

The estimators integrate over the square grid of shifted Fourier frequencies
ω̃_k = 2πk/λ + π/λ, k ∈ {-a, …, a-1}²; the half-step shift makes the grid
symmetric under negation (ω̃_{-k} = -ω̃_{k-1}), which is what kills the
imaginary parts of the downstream statistics.

The weighted sums S(ω̃_k) = Σ_j h(s_j/λ) Z_j e^{i s_j·ω̃_k} factor over
coordinates, so the (2a)²-point evaluation reduces to two n×2a phase tables
and one complex matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .fields import SpatialSample
from .windows import Taper, h_coefficient, taper_eval

#: Columns between direct re-anchoring of the phase recurrence (the repeated
#: complex multiply drifts by ~1 ulp per step; 64 steps keeps it below 1e-13).
_REANCHOR = 64


@dataclass(frozen=True)
class FrequencyGrid:
    """Square grid of Fourier frequencies indexed by k ∈ {-a, …, a-1}²."""

    a: int
    lam: float
    shifted: bool = True

    def __post_init__(self):
        if self.a < 1:
            raise ConfigurationError(f"a must be >= 1, got {self.a}")
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")

    def coords_1d(self) -> np.ndarray:
        """The 2a per-coordinate frequencies, ascending in k."""
        k = np.arange(-self.a, self.a)
        if self.shifted:
            return (2.0 * np.pi * k + np.pi) / self.lam
        return 2.0 * np.pi * k / self.lam

    def integer_coords_1d(self) -> np.ndarray:
        """Frequencies as exact integers in units of π/λ (2k+1 or 2k)."""
        k = np.arange(-self.a, self.a, dtype=np.int64)
        return 2 * k + 1 if self.shifted else 2 * k


def grid_frequencies(grid: FrequencyGrid) -> np.ndarray:
    """All (2a)² frequency 2-vectors in row-major k order."""
    c = grid.coords_1d()
    first = np.repeat(c, c.size)
    second = np.tile(c, c.size)
    return np.column_stack([first, second])


def squared_norm_classes(grid: FrequencyGrid):
    """Group the grid by ‖ω̃_k‖.

    In units of (π/λ)², the squared norms are sums of two integer squares,
    so the (2a)² grid points collapse into far fewer distinct radii.  Returns
    (unique_norms, inverse) where inverse maps the row-major flat grid index
    to its norm class.  This is what makes the radial Bessel sums cheap.
    """
    ints = grid.integer_coords_1d()
    sq = ints[:, None] ** 2 + ints[None, :] ** 2
    uniq, inverse = np.unique(sq.ravel(), return_inverse=True)
    norms = (np.pi / grid.lam) * np.sqrt(uniq.astype(np.float64))
    return norms, inverse


@dataclass(frozen=True)
class TaperedDftField:
    """Tapered DFT of one sample over one grid, with its per-point pieces.

    ``dft`` is the normalized J(ω̃_k) = S(ω̃_k)·λ/(2π n H(0)^{1/2}) (d = 2);
    ``raw`` is the unnormalized S.  ``diag_weight`` is Σ_j h_j² Z_j², the
    diagonal the pair-sum estimators subtract.  The per-coordinate phase
    tables are kept so leave-one-out quantities need no re-exponentiation.
    """

    grid: FrequencyGrid
    dft: np.ndarray
    raw: np.ndarray
    diag_weight: float
    phase_x: np.ndarray
    phase_y: np.ndarray
    taper_values: np.ndarray
    field_values: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        """Per-point DFT weights h_j Z_j."""
        return self.taper_values * self.field_values


def _phase_table(coords: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """exp(i·coords ⊗ freqs) for an arithmetic progression of frequencies.

    Column c+1 is column c times exp(i·step·coords); every _REANCHOR columns
    the recurrence restarts from a direct evaluation.
    """
    n, m = coords.size, freqs.size
    out = np.empty((n, m), dtype=np.complex128)
    if m == 0:
        return out
    step = None
    for c in range(m):
        if c % _REANCHOR == 0:
            out[:, c] = np.exp(1j * freqs[c] * coords)
        else:
            if step is None:
                step = np.exp(1j * (freqs[1] - freqs[0]) * coords)
            np.multiply(out[:, c - 1], step, out=out[:, c])
    return out


def weighted_dft(
    sample: SpatialSample, taper: Taper, grid: FrequencyGrid
) -> TaperedDftField:
    """Compute S and J over the full grid from two phase tables and a GEMM."""
    if sample.n < 1:
        raise ConfigurationError("sample is empty")
    if not np.isclose(sample.lam, grid.lam, rtol=1e-12, atol=0.0):
        raise ConfigurationError(
            f"sample window {sample.lam} does not match grid lambda {grid.lam}"
        )
    coords = grid.coords_1d()
    h_vals = taper_eval(taper, sample.locations / sample.lam)
    z_vals = sample.values
    w = h_vals * z_vals
    phase_x = _phase_table(sample.locations[:, 0], coords)
    phase_y = _phase_table(sample.locations[:, 1], coords)
    raw = (w[:, None] * phase_x).T @ phase_y
    h0 = h_coefficient(taper, (0, 0))
    scale = grid.lam / (2.0 * np.pi * sample.n * np.sqrt(h0))
    diag = float(np.dot(w, w))
    return TaperedDftField(
        grid=grid,
        dft=scale * raw,
        raw=raw,
        diag_weight=diag,
        phase_x=phase_x,
        phase_y=phase_y,
        taper_values=h_vals,
        field_values=np.asarray(z_vals, dtype=np.float64),
    )


def tapered_periodogram(dft: TaperedDftField) -> np.ndarray:
    """I(ω̃_k) = |J(ω̃_k)|², a (2a)×(2a) nonnegative array."""
    return np.abs(dft.dft) ** 2


def leave_one_out_dft(dft: TaperedDftField, j: int) -> np.ndarray:
    """S with point j removed: S(ω̃_k) − h_j Z_j e^{i s_j·ω̃_k}, over all k."""
    n = dft.taper_values.size
    if not (0 <= j < n):
        raise IndexError(f"point index {j} out of range for n={n}")
    contrib = dft.weights[j] * np.outer(dft.phase_x[j], dft.phase_y[j])
    return dft.raw - contrib
