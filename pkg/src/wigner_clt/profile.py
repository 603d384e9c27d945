"""Variance profiles: construction, validation and matrix functionals.

A variance profile is the matrix ``S = (E|H_ij|^2)``.  Valid profiles are
symmetric, doubly stochastic and flat (``N s_ij`` bounded above and below).
"""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .exceptions import (
    ConstructionError,
    ConvergenceError,
    DomainError,
    NearSingularityError,
    NumericError,
)
from .semicircle import in_domain_D, stieltjes

__all__ = [
    "VarianceProfile",
    "ProfileReport",
    "SpectralData",
    "StabilityReport",
    "build_flat",
    "build_from_kernel",
    "validate",
    "spectral_data",
    "kernel_trace",
    "t_theory_matrix",
    "stability_report",
    "load_profile",
    "save_profile",
    "KERNELS",
]

SINGULAR_TOL = 1e-14


class VarianceProfile:
    """Immutable symmetric matrix of entry variances.

    Parameters
    ----------
    s : array_like
        Square matrix of nonnegative variances.  Only the shape and the sign
        of the entries are checked here; use :func:`validate` for the full
        set of invariants.
    """

    def __init__(self, s):
        s = np.array(s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] == 0:
            raise ConstructionError(f"variance profile must be a nonempty square matrix, got shape {s.shape}")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ConstructionError("variances must be finite and nonnegative")
        s.setflags(write=False)
        self._s = s
        self._lock = threading.Lock()
        self._factors: OrderedDict = OrderedDict()

    @property
    def s(self) -> np.ndarray:
        return self._s

    @property
    def n(self) -> int:
        return self._s.shape[0]

    @property
    def c_inf(self) -> float:
        return float(self.n * self._s.min())

    @property
    def c_sup(self) -> float:
        return float(self.n * self._s.max())

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of ``S`` in descending order."""
        try:
            ev = sla.eigvalsh((self._s + self._s.T) / 2, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericError(f"eigensolver failed on variance profile: {exc}") from exc
        return ev[::-1].copy()

    def _lu(self, w: complex):
        """LU factors of ``1 - w S``, cached per ``w``."""
        key = complex(w)
        with self._lock:
            hit = self._factors.get(key)
            if hit is not None:
                self._factors.move_to_end(key)
                return hit
        if abs(1 - key) < SINGULAR_TOL:
            raise NearSingularityError(f"1 - m1*m2 = {1 - key:.3e} is numerically singular")
        a = np.eye(self.n) - key * self._s
        lu = sla.lu_factor(a, check_finite=False)
        with self._lock:
            self._factors[key] = lu
            while len(self._factors) > 16:
                self._factors.popitem(last=False)
        return lu

    def __eq__(self, other):
        if not isinstance(other, VarianceProfile):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._s, other._s)

    __hash__ = None

    def __repr__(self):
        return f"VarianceProfile(n={self.n}, c_inf={self.c_inf:.4g}, c_sup={self.c_sup:.4g})"


def build_flat(n: int) -> VarianceProfile:
    """Standard Wigner profile ``s_ij = 1/n``."""
    if n < 1:
        raise ValueError("n must be positive")
    return VarianceProfile(np.full((n, n), 1.0 / n))


def _symmetric_row_fix(s: np.ndarray) -> np.ndarray:
    # rank-two symmetric correction that zeroes the row-sum residual exactly
    n = s.shape[0]
    r = s.sum(axis=1) - 1
    return s - (r[:, None] + r[None, :]) / n + r.sum() / n**2


def build_from_kernel(
    n: int,
    kernel: Callable,
    sinkhorn_tol: float = 1e-13,
    max_iter: int = 10_000,
) -> VarianceProfile:
    """Profile ``s_ij ~ kernel(i/n, j/n)/n`` rescaled to be doubly stochastic.

    The kernel is sampled on the grid ``x_i = i/n`` (``i = 1..n``) and brought
    to unit row sums by symmetric Sinkhorn scaling ``D K D``.  A final rank-two
    symmetric correction removes the remaining row-sum error.

    Parameters
    ----------
    n : int
        Dimension.
    kernel : callable
        Vectorized symmetric function ``kernel(x, y)`` on [0, 1]^2.
    sinkhorn_tol : float
        Stopping tolerance on the maximum row-sum deviation.
    max_iter : int
        Iteration cap for the Sinkhorn loop.
    """
    if n < 1:
        raise ValueError("n must be positive")
    x = np.arange(1, n + 1) / n
    k = np.asarray(kernel(x[:, None], x[None, :]), dtype=float)
    k = np.broadcast_to(k, (n, n)).copy()
    if not np.all(np.isfinite(k)) or np.any(k <= 0):
        raise ConstructionError("kernel must be finite and strictly positive on the grid")
    k = (k + k.T) / (2 * n)
    d = np.ones(n)
    for _ in range(max_iter):
        kd = k @ d
        if np.max(np.abs(d * kd - 1)) < sinkhorn_tol:
            break
        d = np.sqrt(d / kd)
    else:
        raise ConvergenceError(f"Sinkhorn scaling did not reach {sinkhorn_tol} in {max_iter} iterations")
    s = d[:, None] * k * d[None, :]
    s = _symmetric_row_fix(s)
    s = (s + s.T) / 2
    if np.any(s <= 0):
        raise ConstructionError("row-sum correction produced a nonpositive variance")
    return VarianceProfile(s)


def _cosine_kernel(a: float = 0.5):
    return lambda x, y: 1 + a * np.cos(np.pi * (x - y))


def _exponential_kernel(ell: float = 0.3, floor: float = 0.25):
    return lambda x, y: floor + np.exp(-np.abs(x - y) / ell)


def _block_kernel(ratio: float = 4.0):
    return lambda x, y: np.where((x <= 0.5) == (y <= 0.5), ratio, 1.0)


# named kernels available from configuration files
KERNELS = {
    "cosine": _cosine_kernel,
    "exponential": _exponential_kernel,
    "block": _block_kernel,
}


@dataclass(frozen=True)
class ProfileReport:
    """Outcome of :func:`validate`."""

    n: int
    max_row_deviation: float
    asymmetry: float
    c_inf: float
    c_sup: float
    symmetric: bool
    normalized: bool
    flat: bool

    @property
    def passed(self) -> bool:
        return self.symmetric and self.normalized and self.flat


def validate(S: VarianceProfile, tol: float = 1e-12) -> ProfileReport:
    """Check symmetry, unit row sums and flatness of a profile."""
    s = S.s
    dev = float(np.max(np.abs(s.sum(axis=1) - 1)))
    asym = float(np.max(np.abs(s - s.T)))
    return ProfileReport(
        n=S.n,
        max_row_deviation=dev,
        asymmetry=asym,
        c_inf=S.c_inf,
        c_sup=S.c_sup,
        symmetric=asym <= tol,
        normalized=dev <= tol,
        flat=S.c_inf > 0,
    )


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    gap_plus: float
    gap_minus: float


def spectral_data(S: VarianceProfile) -> SpectralData:
    """Spectrum of ``S`` (descending) and the gaps ``1 - lambda_2``, ``1 + lambda_min``.

    With ``n = 1`` the spectrum below the Perron eigenvalue is empty and both
    gaps are reported as 1.
    """
    ev = S.eigenvalues
    if abs(ev[0] - 1) > 1e-10:
        raise ValueError(f"top eigenvalue {ev[0]!r} is not 1; profile is not doubly stochastic")
    if S.n == 1:
        return SpectralData(ev, 1.0, 1.0)
    return SpectralData(ev, float(1 - ev[1]), float(1 + ev[-1]))


def _m_pair(z, zp):
    m1 = stieltjes(complex(z))
    m2 = stieltjes(complex(zp))
    return m1, m2


def kernel_trace(S: VarianceProfile, z: complex, zp: complex, kind: str) -> complex:
    """Trace functionals of ``S`` entering the variance, the bias and ``Tr T``.

    Parameters
    ----------
    kind : {"variance", "bias", "t_trace"}
        ``variance``: ``Tr(m1' m2' S (1 - m1 m2 S)^-2)``;
        ``bias``: ``Tr(m' m^3 S^2 (1 - m^2 S)^-1)`` with ``m = m(z)`` (``zp`` unused);
        ``t_trace``: ``Tr(m1^2 m2^2 S^2 (1 - m1 m2 S)^-1)``.
    """
    if kind not in ("variance", "bias", "t_trace"):
        raise ValueError(f"unknown kind {kind!r}")
    m1 = stieltjes(complex(z))
    if kind == "bias":
        zp = z
    m2 = stieltjes(complex(zp))
    s = S.s
    lu = S._lu(m1 * m2)
    if kind == "variance":
        x = sla.lu_solve(lu, s, check_finite=False)
        x = sla.lu_solve(lu, x, check_finite=False)
        d1 = stieltjes(complex(z), 1)
        d2 = stieltjes(complex(zp), 1)
        return complex(d1 * d2 * np.trace(x))
    x = sla.lu_solve(lu, s @ s, check_finite=False)
    if kind == "bias":
        return complex(stieltjes(complex(z), 1) * m1**3 * np.trace(x))
    return complex(m1**2 * m2**2 * np.trace(x))


def t_theory_matrix(S: VarianceProfile, z: complex, zp: complex) -> np.ndarray:
    """Deterministic limit ``m1^2 m2^2 (1 - m1 m2 S)^-1 S^2`` of the two-point function."""
    m1, m2 = _m_pair(z, zp)
    lu = S._lu(m1 * m2)
    return m1**2 * m2**2 * sla.lu_solve(lu, S.s @ S.s, check_finite=False)


@dataclass(frozen=True)
class StabilityReport:
    """Observed stability constants of ``1 - m1 m2 S``."""

    gap_plus: float
    gap_minus: float
    norm_ratio: float
    projected_norm: float
    rho: float

    @property
    def rho_ok(self) -> bool:
        return self.rho >= 0.5


def _inf_norm(a: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(a), axis=1)))


def stability_report(S: VarianceProfile, z: complex, zp: complex) -> StabilityReport:
    """Norms of ``(1 - m1 m2 S)^-1`` with and without the Perron direction.

    ``z`` and ``zp`` (or ``z`` and ``conj(zp)``) must both lie in the global
    domain ``D``.
    """
    z, zp = complex(z), complex(zp)
    if not (in_domain_D(z) or in_domain_D(z.conjugate())):
        raise DomainError(f"{z} is outside the domain D and its reflection")
    if not (in_domain_D(zp) or in_domain_D(zp.conjugate())):
        raise DomainError(f"{zp} is outside the domain D and its reflection")
    sd = spectral_data(S)
    n = S.n
    m1, m2 = _m_pair(z, zp)
    eye = np.eye(n)
    inv = sla.lu_solve(S._lu(m1 * m2), eye, check_finite=False)
    proj = inv - inv.mean(axis=0, keepdims=True)
    m = stieltjes(z)
    inv_rho = sla.lu_solve(S._lu(m * m), eye, check_finite=False)
    return StabilityReport(
        gap_plus=sd.gap_plus,
        gap_minus=sd.gap_minus,
        norm_ratio=_inf_norm(inv) * abs(1 - m1 * m2),
        projected_norm=_inf_norm(proj),
        rho=_inf_norm(inv_rho),
    )


def save_profile(S: VarianceProfile, path) -> None:
    """Write ``S`` in the plain-text matrix format (``n`` then ``n`` rows)."""
    with open(path, "w") as fh:
        fh.write(f"{S.n}\n")
        for row in S.s:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_profile(path) -> VarianceProfile:
    """Read a profile written by :func:`save_profile`."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    try:
        n = int(lines[0])
        s = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    except (IndexError, ValueError) as exc:
        raise ConstructionError(f"malformed profile file {path}: {exc}") from exc
    if s.shape != (n, n):
        raise ConstructionError(f"profile file {path} declares n={n} but holds shape {s.shape}")
    return VarianceProfile(s)
