"""Stieltjes transform of the semicircle law and related deterministic quantities.

The transform ``m(z)`` is the solution of ``m**2 + z*m + 1 = 0`` with
``Im m * Im z > 0``.  Both roots are computed in a cancellation free way and
the branch is picked by sign, so there is no dependence on the principal
branch of the complex square root.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

__all__ = [
    "ControlParams",
    "stieltjes",
    "density",
    "kappa",
    "control_params",
    "in_domain_D",
]


def _check_off_axis(z: np.ndarray) -> None:
    if np.any(z.imag == 0):
        raise DomainError("spectral parameter must have nonzero imaginary part")


def _upper(z: np.ndarray) -> np.ndarray:
    """Semicircle transform for Im z > 0 (elementwise)."""
    s = np.sqrt(z * z - 4)
    # choose the sign that avoids cancellation in -(z + s)/2
    s = np.where((np.conj(z) * s).real >= 0, s, -s)
    q = -(z + s) / 2
    # the two roots are q and 1/q; exactly one lies in the upper half-plane
    return np.where(q.imag > 0, q, 1 / q)


def stieltjes(z, order: int = 0):
    """Stieltjes transform of the semicircle law or one of its derivatives.

    Parameters
    ----------
    z : complex or array_like
        Spectral parameter(s) off the real axis.
    order : {0, 1, 2}
        Derivative order.

    Returns
    -------
    complex or ndarray
        ``m(z)``, ``m'(z)`` or ``m''(z)``; scalar in, scalar out.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    scalar = np.isscalar(z)
    z = np.asarray(z, dtype=complex)
    _check_off_axis(z)
    up = z.imag > 0
    mu = _upper(np.where(up, z, np.conj(z)))
    m = np.where(up, mu, np.conj(mu))
    if order >= 1:
        w = 1 - m * m
        d1 = m * m / w
        if order == 2:
            # differentiate m' = m^2/(1 - m^2): m'' = 2 m m' / (1 - m^2)^2
            m = 2 * m * d1 / (w * w)
        else:
            m = d1
    return complex(m) if scalar else m


def density(E):
    """Semicircle density ``sqrt(4 - E**2)/(2 pi)`` on [-2, 2], zero elsewhere."""
    E = np.asarray(E, dtype=float)
    out = np.sqrt(np.clip(4 - E * E, 0, None)) / (2 * np.pi)
    return float(out) if out.ndim == 0 else out


def kappa(E):
    """Distance from ``E`` to the nearest spectral edge."""
    E = np.asarray(E, dtype=float)
    out = np.minimum(np.abs(E + 2), np.abs(E - 2))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ControlParams:
    """Deterministic error scales Psi and Theta at a spectral point."""

    psi: float
    theta: float


def control_params(z: complex, N: int) -> ControlParams:
    """Control parameters ``Psi = sqrt(Im m/(N eta)) + 1/(N eta)`` and ``Theta = 1/(N eta)``.

    ``eta`` is ``|Im z|`` and ``Im m`` is taken from the upper half-plane value.
    """
    z = complex(z)
    if z.imag == 0:
        raise DomainError("spectral parameter must have nonzero imaginary part")
    eta = abs(z.imag)
    im_m = stieltjes(complex(z.real, eta)).imag
    theta = 1.0 / (N * eta)
    return ControlParams(psi=float(np.sqrt(im_m * theta) + theta), theta=theta)


def in_domain_D(z) -> np.ndarray | bool:
    """Membership in the global domain ``|E| <= 5``, ``0 < eta <= 10``."""
    z = np.asarray(z, dtype=complex)
    out = (np.abs(z.real) <= 5) & (z.imag > 0) & (z.imag <= 10)
    return bool(out) if out.ndim == 0 else out
