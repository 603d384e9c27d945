"""Dense Hermitian spectral computations and test functions.

Provides the :class:`TestFunction` container and its built-in library,
eigenvalues and resolvents of Hermitian matrices, linear eigenvalue
statistics centered by the semicircle law, and an independent evaluation of
``Tr f(H)`` through the Helffer-Sjostrand formula.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.linalg as sla
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .exceptions import ConstructionError, DomainError, NumericError

__all__ = [
    "TestFunction",
    "bump",
    "gaussian",
    "cosine_window",
    "TEST_FUNCTIONS",
    "SpectralSample",
    "eigenvalues",
    "resolvent",
    "resolvent_family",
    "sc_expectation",
    "centered_statistic",
    "kappa0",
    "ChiSpec",
    "trace_f_hs",
    "tridiagonal_trace_resolvent",
]


def _smoothstep(t):
    """Quintic ramp from 0 to 1 on [0, 1] with two vanishing derivatives at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10 - 15 * t + 6 * t * t)


def _smoothstep_d1(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 30 * t * t * (1 - t) ** 2, 0.0)


def _smoothstep_d2(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 60 * t * (1 - t) * (1 - 2 * t), 0.0)


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported C^2 profile ``g`` with scaling ``f(x) = g((x - E0)/eta0)``.

    Derivatives are supplied by the caller and checked against central
    finite differences when the object is created.

    Parameters
    ----------
    g, g_prime, g_double_prime : callable
        Vectorized ``g`` and its first two derivatives, zero outside ``support``.
    support : tuple of float
        Interval ``[a, b]`` containing the support of ``g``.
    E0 : float
        Center of the scaled function.
    eta0 : float
        Positive scale.
    breakpoints : tuple of float
        Points where ``g''`` may fail to be smooth; used as panel edges.
    name : str
        Label used in reports.
    """

    __test__ = False  # keep pytest from collecting this class

    g: Callable
    g_prime: Callable
    g_double_prime: Callable
    support: tuple
    E0: float = 0.0
    eta0: float = 1.0
    breakpoints: tuple = ()
    name: str = "custom"
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        a, b = (float(v) for v in self.support)
        if not a < b:
            raise ConstructionError(f"support must be an interval [a, b] with a < b, got {self.support}")
        if not self.eta0 > 0:
            raise ConstructionError(f"eta0 must be positive, got {self.eta0}")
        bps = sorted({a, b, *(float(p) for p in self.breakpoints if a <= p <= b)})
        object.__setattr__(self, "support", (a, b))
        object.__setattr__(self, "breakpoints", tuple(bps))
        if self.validate:
            self._check_derivatives()

    def _check_derivatives(self, rtol: float = 1e-4) -> None:
        a, b = self.support
        h = 1e-5 * (b - a)
        x = np.linspace(a, b, 203)[1:-1]
        bps = np.asarray(self.breakpoints)
        x = x[np.min(np.abs(x[:, None] - bps[None, :]), axis=1) > 4 * h]
        for fn, dfn, label in ((self.g, self.g_prime, "g'"), (self.g_prime, self.g_double_prime, "g''")):
            fd = (np.asarray(fn(x + h)) - np.asarray(fn(x - h))) / (2 * h)
            exact = np.asarray(dfn(x))
            scale = max(np.max(np.abs(exact)), 1e-12)
            err = np.max(np.abs(fd - exact)) / scale
            if not err < rtol:
                raise ConstructionError(f"{label} of test function {self.name!r} fails the finite-difference check (rel. error {err:.2e})")
        outside = np.array([a - 0.5 * (b - a), a - 1e-9, b + 1e-9, b + 0.5 * (b - a)])
        if np.any(np.asarray(self.g(outside)) != 0):
            raise ConstructionError(f"test function {self.name!r} does not vanish outside its support")

    # scaled function f and its derivatives
    def f(self, x):
        return self.g((np.asarray(x, dtype=float) - self.E0) / self.eta0)

    def f_prime(self, x):
        return self.g_prime((np.asarray(x, dtype=float) - self.E0) / self.eta0) / self.eta0

    def f_double_prime(self, x):
        return self.g_double_prime((np.asarray(x, dtype=float) - self.E0) / self.eta0) / self.eta0**2

    @property
    def scaled_support(self) -> tuple:
        a, b = self.support
        return (self.E0 + self.eta0 * a, self.E0 + self.eta0 * b)

    @property
    def scaled_breakpoints(self) -> np.ndarray:
        return self.E0 + self.eta0 * np.asarray(self.breakpoints)

    def at(self, E0: float | None = None, eta0: float | None = None) -> "TestFunction":
        """Same profile ``g`` placed at a different center or scale."""
        return TestFunction(
            self.g, self.g_prime, self.g_double_prime, self.support,
            E0=self.E0 if E0 is None else float(E0),
            eta0=self.eta0 if eta0 is None else float(eta0),
            breakpoints=self.breakpoints, name=self.name, validate=False,
        )

    def reparametrized(self, c: float) -> "TestFunction":
        """Equivalent triple ``(g(c u), E0, c eta0)`` describing the same ``f``."""
        g, gp, gpp = self.g, self.g_prime, self.g_double_prime
        a, b = self.support
        return TestFunction(
            lambda u: g(c * np.asarray(u)),
            lambda u: c * gp(c * np.asarray(u)),
            lambda u: c * c * gpp(c * np.asarray(u)),
            (a / c, b / c), E0=self.E0, eta0=self.eta0 * c,
            breakpoints=tuple(p / c for p in self.breakpoints), name=self.name,
        )

    def scaled_by(self, k: float) -> "TestFunction":
        """Pointwise multiple ``k g``."""
        g, gp, gpp = self.g, self.g_prime, self.g_double_prime
        return TestFunction(
            lambda u: k * g(u), lambda u: k * gp(u), lambda u: k * gpp(u),
            self.support, E0=self.E0, eta0=self.eta0,
            breakpoints=self.breakpoints, name=f"{k:g}*{self.name}", validate=False,
        )


def _bump_g(u):
    u = np.asarray(u, dtype=float)
    w = 1 - u * u
    return np.where(w > 0, w**3, 0.0)


def _bump_gp(u):
    u = np.asarray(u, dtype=float)
    w = 1 - u * u
    return np.where(w > 0, -6 * u * w * w, 0.0)


def _bump_gpp(u):
    u = np.asarray(u, dtype=float)
    w = 1 - u * u
    return np.where(w > 0, w * (30 * u * u - 6), 0.0)


def bump(E0: float = 0.0, eta0: float = 1.0) -> TestFunction:
    """C^2 bump ``(1 - x^2)^3`` on [-1, 1]."""
    return TestFunction(_bump_g, _bump_gp, _bump_gpp, (-1.0, 1.0), E0, eta0, name="bump")


_TAPER = (4.5, 5.0)


def _gauss_parts(u):
    u = np.asarray(u, dtype=float)
    a, b = _TAPER
    t = (np.abs(u) - a) / (b - a)
    sgn = np.sign(u)
    taper = 1 - _smoothstep(t)
    taper_d = -_smoothstep_d1(t) * sgn / (b - a)
    taper_dd = -_smoothstep_d2(t) / (b - a) ** 2
    e = np.exp(-0.5 * u * u)
    return u, e, taper, taper_d, taper_dd


def _gauss_g(u):
    u, e, t0, _, _ = _gauss_parts(u)
    return e * t0


def _gauss_gp(u):
    u, e, t0, t1, _ = _gauss_parts(u)
    return e * (t1 - u * t0)


def _gauss_gpp(u):
    u, e, t0, t1, t2 = _gauss_parts(u)
    return e * (t2 - 2 * u * t1 + (u * u - 1) * t0)


def gaussian(E0: float = 0.0, eta0: float = 1.0) -> TestFunction:
    """``exp(-x^2/2)`` tapered smoothly to zero between |x| = 4.5 and |x| = 5."""
    a, b = _TAPER
    return TestFunction(_gauss_g, _gauss_gp, _gauss_gpp, (-b, b), E0, eta0,
                        breakpoints=(-a, a), name="gaussian")


_K = np.pi / 2


def _cos_g(u):
    u = np.asarray(u, dtype=float)
    c = np.cos(_K * u)
    return np.where(np.abs(u) < 1, c**4, 0.0)


def _cos_gp(u):
    u = np.asarray(u, dtype=float)
    c, s = np.cos(_K * u), np.sin(_K * u)
    return np.where(np.abs(u) < 1, -4 * _K * c**3 * s, 0.0)


def _cos_gpp(u):
    u = np.asarray(u, dtype=float)
    c, s = np.cos(_K * u), np.sin(_K * u)
    return np.where(np.abs(u) < 1, -4 * _K**2 * (c**4 - 3 * c * c * s * s), 0.0)


def cosine_window(E0: float = 0.0, eta0: float = 1.0) -> TestFunction:
    """Cosine window ``cos^4(pi x/2)`` on [-1, 1]."""
    return TestFunction(_cos_g, _cos_gp, _cos_gpp, (-1.0, 1.0), E0, eta0, name="cosine")


TEST_FUNCTIONS = {"bump": bump, "gaussian": gaussian, "cosine": cosine_window}


@dataclass(frozen=True)
class SpectralSample:
    """Sorted eigenvalues of one sampled matrix with its provenance."""

    eigenvalues: np.ndarray
    n: int
    provenance: tuple = ()


def _check_hermitian(H: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    if H.size and np.max(np.abs(H - H.conj().T)) > tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return H


def eigenvalues(H) -> np.ndarray:
    """All eigenvalues of a Hermitian matrix in ascending order."""
    H = _check_hermitian(H)
    try:
        return sla.eigvalsh(H, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc


def resolvent(H, z: complex) -> np.ndarray:
    """Green function ``G(z) = (H - z)^-1``."""
    z = complex(z)
    if z.imag == 0:
        raise DomainError("resolvent needs a spectral parameter off the real axis")
    H = np.asarray(H)
    n = H.shape[0]
    a = H.astype(complex) - z * np.eye(n)
    return sla.solve(a, np.eye(n, dtype=complex), check_finite=False)


def resolvent_family(H, zs: Sequence[complex]) -> Iterator[np.ndarray]:
    """Yield ``G(z)`` for several ``z`` from a single eigendecomposition of ``H``.

    Cheaper than repeated solves when many spectral parameters are probed
    on the same matrix.
    """
    zs = [complex(z) for z in zs]
    if any(z.imag == 0 for z in zs):
        raise DomainError("resolvent needs a spectral parameter off the real axis")
    H = _check_hermitian(H)
    lam, u = sla.eigh(H, check_finite=False)
    uh = u.conj().T
    for z in zs:
        yield (u * (1.0 / (lam - z))) @ uh


def _theta_integral(fn, lo: float, hi: float, points) -> float:
    # x = 2 cos(theta) removes the square-root singularities at the edges
    t_lo, t_hi = np.arccos(hi / 2), np.arccos(lo / 2)
    pts = [float(np.arccos(p / 2)) for p in points if lo < p < hi]

    def integrand(t):
        s = np.sin(t)
        return fn(2 * np.cos(t)) * (2 / np.pi) * s * s

    val, _ = quad(integrand, t_lo, t_hi, points=pts or None, epsabs=1e-12, epsrel=1e-12, limit=1000)
    return val


def sc_expectation(tf: TestFunction, n: int) -> float:
    """``n * int f(x) rho_sc(x) dx`` by adaptive quadrature."""
    lo, hi = tf.scaled_support
    lo, hi = max(lo, -2.0), min(hi, 2.0)
    if lo >= hi:
        return 0.0
    pts = list(tf.scaled_breakpoints) + [tf.E0]
    # extra interior points help quad resolve narrow mesoscopic functions
    pts += list(np.linspace(*tf.scaled_support, 9))
    return n * _theta_integral(lambda x: tf.f(x), lo, hi, pts)


def centered_statistic(sample, tf: TestFunction, sc: float | None = None):
    """Linear statistic ``sum_i f(lambda_i)`` and its semicircle-centered version.

    Parameters
    ----------
    sample : SpectralSample or array_like
        Eigenvalues.
    tf : TestFunction
    sc : float, optional
        Precomputed :func:`sc_expectation` for this ``tf`` and dimension.

    Returns
    -------
    raw, centered, sc_expectation : float
    """
    lam = sample.eigenvalues if isinstance(sample, SpectralSample) else np.asarray(sample, dtype=float)
    raw = float(np.sum(tf.f(lam)))
    if sc is None:
        sc = sc_expectation(tf, lam.size)
    return raw, raw - sc, sc


def kappa0(tf: TestFunction) -> float:
    """Distance from the scaled support of ``f`` to the spectral edges +-2."""
    lo, hi = tf.scaled_support
    if lo <= 2 <= hi or lo <= -2 <= hi:
        return 0.0
    return float(min(abs(lo - 2), abs(hi - 2), abs(lo + 2), abs(hi + 2)))


@dataclass(frozen=True)
class ChiSpec:
    """Cutoff ``chi`` in the almost-analytic extension and Helffer-Sjostrand grid settings.

    ``chi`` equals 1 for ``|y| <= inner``, 0 for ``|y| >= outer`` and is a
    quintic (C^2) ramp in between.
    """

    inner: float = 1.0
    outer: float = 2.0
    y_min: float = 1e-4
    order: int = 10
    check_order: int = 6
    rtol: float = 1e-6

    def chi(self, y):
        return 1 - _smoothstep((np.abs(y) - self.inner) / (self.outer - self.inner))

    def chi_prime(self, y):
        w = self.outer - self.inner
        return -_smoothstep_d1((np.abs(y) - self.inner) / w) * np.sign(y) / w


def tridiagonal_trace_resolvent(a: np.ndarray, b2: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``Tr (T - z)^-1`` for a Hermitian tridiagonal ``T`` at many ``z``.

    Uses ``Tr G = -d/dz log det(T - z)`` with the ratios ``r_k`` of
    consecutive leading minors and their ``z``-derivatives.

    Parameters
    ----------
    a : ndarray
        Diagonal of ``T`` (real).
    b2 : ndarray
        Squared moduli of the off-diagonal.
    z : ndarray
        Spectral parameters off the real axis.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    for c in range(0, z.size, 8192):
        zc = z.flat[c:c + 8192]
        ir = 1.0 / (a[0] - zc)
        dr = -np.ones_like(zc)
        acc = -ir
        for k in range(1, a.size):
            t = b2[k - 1] * ir
            dr = t * dr * ir - 1
            ir = 1.0 / ((a[k] - zc) - t)
            acc += dr * ir
        out.flat[c:c + 8192] = -acc
    return out


def _gl_panels(edges: np.ndarray, t: np.ndarray, w: np.ndarray):
    lo, hi = edges[:-1, None], edges[1:, None]
    x = ((lo + hi) / 2 + (hi - lo) / 2 * t).ravel()
    wx = ((hi - lo) / 2 * w).ravel()
    return x, wx


def _refine_edges(breaks: Sequence[float], width: float) -> np.ndarray:
    out = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(np.ceil((hi - lo) / width)))
        out.extend(np.linspace(lo, hi, k + 1)[1:])
    return np.asarray(out)


def _hs_integral(a, b2, tf: TestFunction, chi: ChiSpec, order: int) -> float:
    t, w = leggauss(order)
    xbreaks = sorted(set(float(v) for v in tf.scaled_breakpoints))
    # geometric y panels on [y_min, inner], then uniform panels over the ramp
    n_geo = int(np.ceil(np.log2(chi.inner / chi.y_min)))
    y_edges = np.geomspace(chi.y_min, chi.inner, n_geo + 1)
    y_edges = np.concatenate([y_edges, np.linspace(chi.inner, chi.outer, 5)[1:]])
    total = 0.0
    for ylo, yhi in zip(y_edges[:-1], y_edges[1:]):
        y, wy = _gl_panels(np.array([ylo, yhi]), t, w)
        # panels of width ~2y resolve the poles near the axis; levels below
        # 1e-3 eta0 carry weight O(y^2) and share the coarsest grid
        width = min(max(2 * ylo, 1e-3 * tf.eta0), tf.eta0 / 8)
        x, wx = _gl_panels(_refine_edges(xbreaks, width), t, w)
        f = tf.f(x)
        fp = tf.f_prime(x)
        fpp = tf.f_double_prime(x)
        keep = (f != 0) | (fp != 0) | (fpp != 0)
        x, wx, f, fp, fpp = x[keep], wx[keep], f[keep], fp[keep], fpp[keep]
        if x.size == 0:
            continue
        yy = np.repeat(y, x.size)
        xx = np.tile(x, y.size)
        trg = tridiagonal_trace_resolvent(a, b2, xx + 1j * yy).reshape(y.size, x.size)
        c0, c1 = chi.chi(y)[:, None], chi.chi_prime(y)[:, None]
        # dbar of the order-one almost-analytic extension
        dbar = 0.5j * (y[:, None] * fpp * c0 + (f + 1j * y[:, None] * fp) * c1)
        total += float(np.sum(wy[:, None] * wx * dbar * trg).real)
    # lower half-plane contributes the complex conjugate
    return 2 * total / np.pi


def trace_f_hs(H, tf: TestFunction, chi_spec: ChiSpec | None = None) -> float:
    """``Tr f(H)`` from the Helffer-Sjostrand formula by 2D quadrature.

    The matrix is reduced to tridiagonal form once; ``Tr G(z)`` at every
    quadrature node then costs O(n).  The strip ``|y| < y_min`` is omitted.
    Results of two Gauss-Legendre orders on the same panels are compared and a
    :class:`NumericError` is raised when they differ by more than
    ``chi_spec.rtol`` (relative, with unit floor).
    """
    chi = chi_spec or ChiSpec()
    H = _check_hermitian(H)
    n = H.shape[0]
    if n > 500:
        raise ValueError("trace_f_hs is limited to n <= 500")
    if n == 1:
        a = np.real(np.asarray(H, dtype=complex).ravel())
        b2 = np.zeros(0)
    else:
        T = sla.hessenberg(H, check_finite=False)
        a = np.real(np.diag(T)).copy()
        b2 = np.abs(np.diag(T, -1)) ** 2
    coarse = _hs_integral(a, b2, tf, chi, chi.check_order)
    fine = _hs_integral(a, b2, tf, chi, chi.order)
    err = abs(fine - coarse)
    if err > chi.rtol * max(1.0, abs(fine)):
        raise NumericError(
            f"Helffer-Sjostrand quadrature did not converge: coarse={coarse!r}, fine={fine!r}, "
            f"estimated error {err:.3e} exceeds rtol {chi.rtol}"
        )
    return fine
