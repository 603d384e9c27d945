"""Empirical checks of the resolvent local laws and the two-point function.

Every check returns observed error divided by its deterministic control
scale.  Denominators use only the semicircle transform and the variance
profile, never the sampled matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .exceptions import DomainError
from .profile import VarianceProfile, t_theory_matrix
from .semicircle import control_params, stieltjes
from .spectral import resolvent

__all__ = [
    "LawReport",
    "IdentityCheck",
    "in_domain_Dprime",
    "pass_band",
    "probe_grid",
    "default_test_vectors",
    "check_resolvent_laws",
    "compute_T",
    "check_T_laws",
    "check_trace_identities",
    "rho_of",
]


def pass_band(N: int, base: float = 5.0, slack: float = 0.05) -> float:
    """Default ceiling ``base * N**slack`` for a law ratio."""
    return float(base * N**slack)


@dataclass
class LawReport:
    """Named law ratios at the probe ``(z, zp)`` and their ceilings."""

    z: complex
    zp: complex | None
    ratios: dict = field(default_factory=dict)
    pass_bands: dict = field(default_factory=dict)

    def passed(self) -> bool:
        return all(self.ratios[k] <= self.pass_bands[k] for k in self.ratios)

    def failures(self) -> list:
        return [k for k in self.ratios if not self.ratios[k] <= self.pass_bands[k]]


def in_domain_Dprime(z, N: int, tau: float = 0.05) -> bool:
    """``|E| <= 5`` and ``N**(-1 + tau) <= Im z <= 10``."""
    z = complex(z)
    return abs(z.real) <= 5 and N ** (-1 + tau) <= z.imag <= 10


def _require_Dprime(z, N, tau, allow_conj=False):
    z = complex(z)
    if in_domain_Dprime(z, N, tau) or (allow_conj and in_domain_Dprime(z.conjugate(), N, tau)):
        return
    raise DomainError(f"{z} lies outside the local-law domain for N={N}")


def probe_grid(N: int, energies=(-1.5, -0.5, 0.0, 0.5, 1.5), exponents=(0.3, 0.5, 0.7), tau: float = 0.05) -> list:
    """Default probes ``E + i N**-a`` that lie in the local-law domain."""
    out = []
    for a in exponents:
        for E in energies:
            z = complex(E, N ** (-a))
            if in_domain_Dprime(z, N, tau):
                out.append(z)
    return out


def default_test_vectors(N: int, seed: int = 0) -> np.ndarray:
    """Columns ``e_1``, ``e_N``, the flat unit vector and one seeded random unit vector."""
    v = np.zeros((N, 4))
    v[0, 0] = 1
    v[-1, 1] = 1
    v[:, 2] = 1 / np.sqrt(N)
    r = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2**31,))).standard_normal(N)
    v[:, 3] = r / np.linalg.norm(r)
    return v


def rho_of(S: VarianceProfile, z: complex) -> float:
    """``||(1 - m(z)^2 S)^-1||_inf``."""
    return _rho(S, stieltjes(complex(z)))


def _rho(S: VarianceProfile, m: complex) -> float:
    inv = sla.lu_solve(S._lu(m * m), np.eye(S.n), check_finite=False)
    return float(np.max(np.sum(np.abs(inv), axis=1)))


def check_resolvent_laws(H, S: VarianceProfile, z: complex, test_vectors=None, G=None,
                         tau: float = 0.05, band: float | None = None, rho: float | None = None) -> LawReport:
    """Entrywise, averaged, strong and isotropic law ratios at ``z``.

    Parameters
    ----------
    H : ndarray
        Hermitian sample.
    S : VarianceProfile
    z : complex
        Probe in the local-law domain.
    test_vectors : ndarray, optional
        Unit vectors as columns; defaults to :func:`default_test_vectors`.
    G : ndarray, optional
        Precomputed resolvent ``(H - z)^-1``.
    rho : float, optional
        Precomputed ``||(1 - m^2 S)^-1||_inf`` (depends only on ``S`` and ``z``).
    """
    n = S.n
    _require_Dprime(z, n, tau)
    if G is None:
        G = resolvent(H, z)
    m = stieltjes(complex(z))
    cp = control_params(z, n)
    diag = np.diagonal(G)
    off = G - m * np.eye(n)
    entry = float(np.max(np.abs(off)))
    avg = abs(diag.mean() - m)
    strong = float(np.max(np.abs(S.s @ diag - m)))
    if test_vectors is None:
        test_vectors = default_test_vectors(n)
    V = np.asarray(test_vectors)
    iso = np.abs(V.conj().T @ (G @ V) - m * (V.conj().T @ V))
    b = pass_band(n) if band is None else band
    ratios = {
        "entrywise": entry / cp.psi,
        "average": float(avg) / cp.theta,
        "strong": strong / ((_rho(S, m) if rho is None else rho) * cp.psi**2),
        "isotropic": float(np.max(iso)) / cp.psi,
    }
    return LawReport(complex(z), None, ratios, {k: b for k in ratios})


def compute_T(H, S: VarianceProfile, z: complex, zp: complex, G1=None, G2=None) -> np.ndarray:
    """Two-point function ``T_ab = sum_{j != b} s_aj G_jb(z) G_jb(zp)``."""
    if G1 is None:
        G1 = resolvent(H, z)
    if G2 is None:
        G2 = G1.conj().T if complex(zp) == complex(z).conjugate() else resolvent(H, zp)
    P = G1 * G2
    return S.s @ P - S.s * np.diagonal(P)[None, :]


def check_T_laws(H, S: VarianceProfile, z: complex, zp: complex, G1=None, G2=None,
                 tau: float = 0.05, band: float | None = None, T=None) -> LawReport:
    """Entrywise, trace and recursion ratios for the two-point function."""
    n = S.n
    _require_Dprime(z, n, tau, allow_conj=True)
    _require_Dprime(zp, n, tau, allow_conj=True)
    if T is None:
        T = compute_T(H, S, z, zp, G1, G2)
    m1, m2 = stieltjes(complex(z)), stieltjes(complex(zp))
    c1, c2 = control_params(z, n), control_params(zp, n)
    xi2 = c1.psi**1.5 * c2.psi + c1.psi * c2.psi**1.5
    rho2 = abs(1 / (1 - m1 * m2))
    tth = t_theory_matrix(S, z, zp)
    entry = float(np.max(np.abs(T - tth)))
    tr_err = abs(np.trace(T) - np.trace(tth))
    tr_scale = n * xi2 + n * c1.theta**2 + n * c1.theta * c2.theta
    s = S.s
    P = -T / m1 + m2 * (s @ T) + m1 * m2**2 * (s @ s)
    b = pass_band(n) if band is None else band
    ratios = {
        "T_entrywise": entry / (rho2 * xi2),
        "T_trace": float(tr_err) / tr_scale,
        "P_recursion": float(np.max(np.abs(P))) / xi2,
    }
    return LawReport(complex(z), complex(zp), ratios, {k: b for k in ratios})


@dataclass(frozen=True)
class IdentityCheck:
    """Observed deviation of a trace identity and its theoretical scale."""

    name: str
    deviation: float
    scale: float

    @property
    def ratio(self) -> float:
        if self.scale > 0:
            return self.deviation / self.scale
        return 0.0 if self.deviation == 0 else float("inf")


def check_trace_identities(H, S: VarianceProfile, z: complex, zp: complex, T=None, G1=None, G2=None) -> dict:
    """Resolvent-identity relations for ``Tr(Pi T)`` and the deterministic identity for ``Pi``.

    Returns a map from identity name to :class:`IdentityCheck`.  For
    ``z != zp``: ``Tr(Pi T) ~ (m1 - m2)/(z - zp) - m1 m2`` with scale
    ``(Theta(z) + Theta(zp))/|Im z|``; for ``z == zp`` (within 1e-12):
    ``Tr(Pi T) ~ m' - m^2`` with scale ``Theta(z)/|Im z|``.  The deterministic
    relation ``Tr(m1^2 m2^2 Pi (1 - m1 m2 S)^-1) = m1^2 m2^2/(1 - m1 m2)`` is
    reported with unit scale.
    """
    z, zp = complex(z), complex(zp)
    n = S.n
    if T is None:
        T = compute_T(H, S, z, zp, G1, G2)
    tr_pi_t = T.sum() / n
    m1, m2 = stieltjes(z), stieltjes(zp)
    out = {}
    if abs(z - zp) < 1e-12:
        target = stieltjes(z, 1) - m1 * m1
        scale = control_params(z, n).theta / abs(z.imag)
        out["T22"] = IdentityCheck("T22", float(abs(tr_pi_t - target)), scale)
    else:
        target = (m1 - m2) / (z - zp) - m1 * m2
        scale = (control_params(z, n).theta + control_params(zp, n).theta) / abs(z.imag)
        out["T2"] = IdentityCheck("T2", float(abs(tr_pi_t - target)), scale)
    w = m1 * m2
    ones = np.ones(n)
    lhs = w * w * (ones @ sla.lu_solve(S._lu(w), ones, check_finite=False)) / n
    rhs = w * w / (1 - w)
    out["T1"] = IdentityCheck("T1", float(abs(lhs - rhs) / max(abs(rhs), 1e-300)), 1.0)
    return out
