"""Brute-force oracle implementations of the quadruple/sextuple sums.

These evaluate the estimator definitions literally — explicit loops over
index tuples with the distinct-index constraints — so the closed-form
production code in ``estimators`` can be pinned against them exactly.  They
are deliberately independent of the phase-table machinery (phases come from
one direct ``exp`` call) and are size-guarded: they exist for tests and
diagnostics, never for production data.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .bessel import j0
from .errors import ConfigurationError
from .estimators import TestConfig
from .fields import SpatialSample
from .spectral import FrequencyGrid, grid_frequencies
from .windows import Taper, h_coefficient, taper_eval

#: Index-tuple constraints for the quadruple sums, as sets of positions that
#: must differ.  "pairwise" is all six pairs; "cyclic" leaves the diagonal
#: coincidences j1=j3 and j2=j4 allowed; "halves" only separates the two
#: DFT-pair factors.
CONSTRAINTS = {
    "pairwise": ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)),
    "cyclic": ((0, 1), (1, 2), (2, 3), (3, 0)),
    "halves": ((0, 1), (2, 3)),
}


def _tuple_allowed(idx, constraint: str) -> bool:
    if constraint == "cyclic_minus_pairwise":
        return _tuple_allowed(idx, "cyclic") and not _tuple_allowed(idx, "pairwise")
    if constraint == "halves_minus_pairwise":
        return _tuple_allowed(idx, "halves") and not _tuple_allowed(idx, "pairwise")
    return all(idx[p] != idx[q] for p, q in CONSTRAINTS[constraint])


def _guard(n: int, a: int, n_max: int, a_max: int):
    if n > n_max or a > a_max:
        raise ConfigurationError(
            f"brute-force oracle limited to n <= {n_max}, a <= {a_max}; "
            f"got n={n}, a={a}"
        )


def _weights_and_phases(sample: SpatialSample, taper: Taper, grid: FrequencyGrid):
    freqs = grid_frequencies(grid)
    h_vals = taper_eval(taper, sample.locations / sample.lam)
    w = h_vals * sample.values
    phases = np.exp(1j * sample.locations @ freqs.T)
    return w, phases


def quadruple_sums(
    sample: SpatialSample, taper: Taper, grid: FrequencyGrid, constraint: str
) -> np.ndarray:
    """Σ over allowed (j1,j2,j3,j4) of w₁w₂w₃w₄ e^{i(s₁−s₂+s₃−s₄)·ω̃_k},
    one complex value per flat grid index k."""
    _guard(sample.n, grid.a, n_max=12, a_max=4)
    w, phases = _weights_and_phases(sample, taper, grid)
    conj = np.conj(phases)
    total = np.zeros(phases.shape[1], dtype=np.complex128)
    for idx in product(range(sample.n), repeat=4):
        if not _tuple_allowed(idx, constraint):
            continue
        j1, j2, j3, j4 = idx
        coeff = w[j1] * w[j2] * w[j3] * w[j4]
        total += coeff * (phases[j1] * conj[j2] * phases[j3] * conj[j4])
    return total


def _assert_real(values: np.ndarray, rel: float = 1e-9) -> np.ndarray:
    scale = np.abs(values.real).max() + 1e-300
    worst = np.abs(values.imag).max()
    if worst > rel * scale:
        raise ConfigurationError(
            f"imaginary part {worst:.3e} exceeds {rel:.0e} of real scale {scale:.3e}"
        )
    return values.real


def d1_brute(
    sample: SpatialSample, taper: Taper, grid: FrequencyGrid, constraint: str
) -> float:
    """Quadruple-sum estimate of ∫f² under the given index constraint."""
    sums = quadruple_sums(sample, taper, grid, constraint)
    h0 = h_coefficient(taper, (0, 0))
    pref = (2.0 * np.pi * grid.lam) ** 2 / (2.0 * sample.n**4 * h0**2)
    return float(pref * _assert_real(np.array([sums.sum()]))[0])


def d1_naive(sample: SpatialSample, taper: Taper, grid: FrequencyGrid) -> float:
    """The pairwise-distinct (all six pairs) quadruple-sum oracle."""
    if sample.n < 4:
        raise ConfigurationError(
            f"pairwise-distinct quadruples need n >= 4, got n={sample.n}"
        )
    return d1_brute(sample, taper, grid, "pairwise")


def pair_sums(
    sample: SpatialSample, taper: Taper, grid: FrequencyGrid
) -> np.ndarray:
    """Σ_{j1≠j2} w₁w₂ e^{i(s₁−s₂)·ω̃_k} per flat grid index (oracle for the
    |S|² − Σh²Z² identity)."""
    _guard(sample.n, grid.a, n_max=64, a_max=8)
    w, phases = _weights_and_phases(sample, taper, grid)
    conj = np.conj(phases)
    total = np.zeros(phases.shape[1], dtype=np.complex128)
    for j1 in range(sample.n):
        for j2 in range(sample.n):
            if j1 == j2:
                continue
            total += (w[j1] * w[j2]) * (phases[j1] * conj[j2])
    return total


def d2_brute(
    sample: SpatialSample, taper: Taper, config: TestConfig, constraint: str
) -> float:
    """Sextuple-sum estimate of the radial-average functional.

    Literal evaluation: for each radial node ω̃_r and frequency pair (k, ℓ),
    sum w₁w₂w₃w₄ e^{i(s₁−s₂)·ω̃_k} e^{i(s₃−s₄)·ω̃_ℓ} J₀(ω̃_r‖ω̃_k‖)J₀(ω̃_r‖ω̃_ℓ‖)
    over the allowed quadruples.  The (k, ℓ) double sum factorizes per tuple,
    which keeps the oracle at O(n⁴·a_r) after an O(n²·a²·a_r) table build.
    """
    if sample.n > 10 or config.a > 3 or config.a_r > 4:
        raise ConfigurationError(
            "sextuple-sum oracle limited to n <= 10, a <= 3, a_r <= 4; got "
            f"n={sample.n}, a={config.a}, a_r={config.a_r}"
        )
    grid = config.frequency_grid()
    w, phases = _weights_and_phases(sample, taper, grid)
    conj = np.conj(phases)
    freqs = grid_frequencies(grid)
    radii = config.radial_grid()
    bessel = j0(np.multiply.outer(radii, np.hypot(freqs[:, 0], freqs[:, 1])))
    n = sample.n
    # pair_vec[j1, j2, r] = Σ_k e^{i(s_j1 − s_j2)·ω̃_k} J₀(ω̃_r ‖ω̃_k‖)
    pair_vec = np.einsum("ik,jk,rk->ijr", phases, conj, bessel)
    acc = np.zeros(radii.size, dtype=np.complex128)
    for idx in product(range(n), repeat=4):
        if not _tuple_allowed(idx, constraint):
            continue
        j1, j2, j3, j4 = idx
        coeff = w[j1] * w[j2] * w[j3] * w[j4]
        acc += coeff * pair_vec[j1, j2] * pair_vec[j3, j4]
    h0 = h_coefficient(taper, (0, 0))
    per_radius = _assert_real(acc) / (n**4 * h0**2)
    return float(
        (2.0 * np.pi) ** 4 / config.lam_r * np.dot(radii, per_radius)
    )


def d2_naive(sample: SpatialSample, taper: Taper, config: TestConfig) -> float:
    """The pairwise-distinct sextuple-sum oracle."""
    return d2_brute(sample, taper, config, "pairwise")
