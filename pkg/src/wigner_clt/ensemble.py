"""Sampling generalized Wigner matrices and their fourth-cumulant sum."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profile import VarianceProfile

__all__ = [
    "DISTRIBUTIONS",
    "EnsembleSpec",
    "excess_kurtosis",
    "draw_standard",
    "sample_rng",
    "sample",
    "fourth_cumulant_sum",
]

DISTRIBUTIONS = ("gaussian", "rademacher", "shifted_bernoulli", "uniform")


def _check_dist(dist: str, p: float | None) -> None:
    if dist not in DISTRIBUTIONS:
        raise ValueError(f"unsupported distribution {dist!r}; choose from {DISTRIBUTIONS}")
    if dist == "shifted_bernoulli":
        if p is None or not 0 < p < 1:
            raise ValueError(f"shifted_bernoulli needs p in (0, 1), got {p!r}")


def excess_kurtosis(dist: str, p: float | None = None) -> float:
    """Fourth cumulant of the standardized (mean 0, variance 1) distribution."""
    _check_dist(dist, p)
    if dist == "gaussian":
        return 0.0
    if dist == "rademacher":
        return -2.0
    if dist == "uniform":
        return -1.2
    q = p * (1 - p)
    return (1 - 6 * q) / q


def draw_standard(rng: np.random.Generator, dist: str, size, p: float | None = None) -> np.ndarray:
    """Centered unit-variance draws from one of the supported distributions."""
    _check_dist(dist, p)
    if dist == "gaussian":
        return rng.standard_normal(size)
    if dist == "rademacher":
        return np.where(rng.random(size) < 0.5, -1.0, 1.0)
    if dist == "uniform":
        return rng.uniform(-np.sqrt(3), np.sqrt(3), size)
    hi = np.sqrt((1 - p) / p)
    lo = -np.sqrt(p / (1 - p))
    return np.where(rng.random(size) < p, hi, lo)


@dataclass(frozen=True)
class EnsembleSpec:
    """Symmetry class, entry law, variance profile and seed of an ensemble.

    ``p`` parameterizes ``shifted_bernoulli``.  The diagonal uses ``diag_dist``
    (default: same as ``dist``) scaled to variance ``s_ii``.
    """

    beta: int
    dist: str
    profile: VarianceProfile
    seed: int = 0
    diag_dist: str | None = None
    p: float | None = None

    def __post_init__(self):
        if self.beta not in (1, 2):
            raise ValueError(f"beta must be 1 or 2, got {self.beta!r}")
        _check_dist(self.dist, self.p)
        _check_dist(self.diagonal, self.p)
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def diagonal(self) -> str:
        return self.dist if self.diag_dist is None else self.diag_dist

    @property
    def n(self) -> int:
        return self.profile.n


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, index)``.

    Entries are drawn in a fixed order (diagonal, upper real parts, upper
    imaginary parts), so the position in the stream is the entry index.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def sample(spec: EnsembleSpec, index: int = 0) -> np.ndarray:
    """Draw sample number ``index`` of the ensemble.

    Returns a real symmetric (``beta = 1``) or complex Hermitian
    (``beta = 2``) matrix with ``E|H_ij|^2 = s_ij``.  For ``beta = 2`` the
    off-diagonal real and imaginary parts are independent with variance
    ``s_ij/2`` each, and the diagonal is real.
    """
    rng = sample_rng(spec.seed, index)
    s = spec.profile.s
    n = spec.n
    iu = np.triu_indices(n, 1)
    diag = draw_standard(rng, spec.diagonal, n, spec.p) * np.sqrt(np.diag(s))
    sd = np.sqrt(s[iu])
    if spec.beta == 1:
        h = np.zeros((n, n))
        h[iu] = draw_standard(rng, spec.dist, iu[0].size, spec.p) * sd
        h = h + h.T
    else:
        sd = sd / np.sqrt(2)
        re = draw_standard(rng, spec.dist, iu[0].size, spec.p) * sd
        im = draw_standard(rng, spec.dist, iu[0].size, spec.p) * sd
        h = np.zeros((n, n), dtype=complex)
        h[iu] = re + 1j * im
        h = h + h.conj().T
    h[np.diag_indices(n)] = diag
    return h


def fourth_cumulant_sum(spec: EnsembleSpec) -> float:
    """Analytic sum ``k4`` of the fourth cumulants of all real entry components.

    For ``beta = 2`` each off-diagonal entry contributes two components of
    variance ``s_ij/2``, giving ``kappa4 * s_ij**2 / 2``.
    """
    s = spec.profile.s
    d2 = float(np.sum(np.diag(s) ** 2))
    off2 = float(np.sum(s * s)) - d2
    k_off = excess_kurtosis(spec.dist, spec.p)
    k_diag = excess_kurtosis(spec.diagonal, spec.p)
    if spec.beta == 2:
        off2 /= 2
    return k_off * off2 + k_diag * d2
