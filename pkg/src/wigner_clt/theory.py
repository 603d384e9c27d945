"""Deterministic predictions: variance and bias functionals and mesoscopic limits.

The variance ``V(f)`` and the bias ``B(f)`` are contour integrals of an
almost-analytic extension ``f~`` against kernels built from the semicircle
transform and the spectrum of the variance profile.  Each contour is a pair
of horizontal lines ``Im z = +-h``.

Heights.  ``f~`` is analytic only up to a defect of order ``y**2`` (second
order extension), so the integral depends weakly on the height.  By default
the heights are driven to zero (halving until the value settles), which is
the limit the formulas describe; the literal heights ``eta0 N**-tau / k``
remain available with ``height_limit=False``.

Profile spectrum.  Writing the eigenvalues of ``S`` as ``1`` and
``lambda_j``, the trace term splits into the Perron part
``1/(1 - m m')**2`` and a power series in ``m m'`` whose coefficients are
power sums of the ``lambda_j``.  The series part factorizes over the two
contours, so only the Perron part needs the full pair grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss

from .exceptions import ConvergenceError, HypothesisViolation, NumericError
from .profile import VarianceProfile, kernel_trace, spectral_data
from .semicircle import stieltjes
from .spectral import ChiSpec, TestFunction, kappa0

__all__ = [
    "ContourSpec",
    "TheoryPrediction",
    "c0_of",
    "default_tau",
    "almost_analytic",
    "variance_Vf",
    "bias_Bf",
    "predict",
    "fourier_transform",
    "bulk_limit",
    "edge_limit",
]

_CHI = ChiSpec()
_PAIR_CHUNK = 512


def c0_of(tf: TestFunction, N: int) -> float:
    """Largest ``c0`` with ``eta0 sqrt(kappa0 + eta0) >= N**(-1 + c0)``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    scale = tf.eta0 * np.sqrt(kappa0(tf) + tf.eta0)
    return float(1 + np.log(scale) / np.log(N))


def default_tau(c0: float) -> float:
    return float(min(0.05, c0 / 32))


@dataclass(frozen=True)
class ContourSpec:
    """Two horizontal contour pairs at heights ``eta0 N**-tau / k``, ``k = 1, 2``.

    Parameters
    ----------
    tau : float
        Height exponent; must satisfy ``0 < tau < c0/16``.
    eta0 : float
        Scale of the test function.
    N : int
        Matrix dimension.
    c0 : float
        Scale exponent of the configuration (see :func:`c0_of`).
    x_window : tuple of float
        Real interval carrying the branches: the scaled support padded by
        ``eta0``.  The integrand vanishes off the support, so quadrature
        nodes are only placed there.
    nodes_per_branch : int
        Minimum number of quadrature nodes on each branch.
    height_limit : bool
        Drive the heights to zero (default) instead of using the literal ones.
    rtol : float
        Relative tolerance of the height limit.
    order : int
        Gauss-Legendre order per panel.
    """

    tau: float
    eta0: float
    N: int
    c0: float
    x_window: tuple
    nodes_per_branch: int = 256
    height_limit: bool = True
    rtol: float = 1e-4
    order: int = 8
    start_ratio: float = 0.04
    max_halvings: int = 8

    def __post_init__(self):
        if not self.tau > 0:
            raise HypothesisViolation(f"tau must be positive, got {self.tau}")
        if self.c0 <= 0 or self.tau >= self.c0 / 16:
            raise HypothesisViolation(
                f"scale hypothesis violated: need 0 < tau < c0/16, got tau={self.tau:.4g}, c0={self.c0:.4g} "
                f"(eta0*sqrt(kappa0+eta0) must be at least N^(-1+16 tau))"
            )
        if not 0 < self.eta0 <= 1:
            raise ValueError("eta0 must lie in (0, 1] so that the contours stay where chi = 1")

    @classmethod
    def for_function(cls, tf: TestFunction, N: int, tau: float | None = None, **kw) -> "ContourSpec":
        c0 = c0_of(tf, N)
        if tau is None:
            if c0 <= 0:
                raise HypothesisViolation(
                    f"scale hypothesis violated: eta0*sqrt(kappa0+eta0) < N^-1 (c0={c0:.4g})"
                )
            tau = default_tau(c0)
        lo, hi = tf.scaled_support
        return cls(tau=float(tau), eta0=tf.eta0, N=int(N), c0=c0,
                   x_window=(lo - tf.eta0, hi + tf.eta0), **kw)

    @property
    def heights(self) -> tuple:
        h = self.eta0 * self.N ** (-self.tau)
        return (h, h / 2)


@dataclass(frozen=True)
class TheoryPrediction:
    """Variance and bias with the numerical settings that produced them."""

    variance: float
    bias: float
    k4_used: float
    quadrature_error_estimate: float
    tau: float
    heights: tuple
    height_limit: bool
    imag_residue: float
    history: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "variance": self.variance,
            "bias": self.bias,
            "k4": self.k4_used,
            "quadrature_error_estimate": self.quadrature_error_estimate,
            "tau": self.tau,
            "heights": list(self.heights),
            "height_limit": self.height_limit,
            "imag_residue": self.imag_residue,
        }


def almost_analytic(tf: TestFunction, z, order: int = 1, chi: ChiSpec = _CHI):
    """Almost-analytic extension ``(f(x) + i y f'(x)) chi(y)``.

    ``order=2`` adds the ``-y**2 f''(x)/2`` term, which makes the
    ``dbar``-defect quadratic in ``y``.
    """
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    val = tf.f(x) + 1j * y * tf.f_prime(x)
    if order == 2:
        val = val - 0.5 * y * y * tf.f_double_prime(x)
    elif order != 1:
        raise ValueError("order must be 1 or 2")
    out = val * chi.chi(y)
    return complex(out) if out.ndim == 0 else out


def _panel_edges(breaks, width: float) -> np.ndarray:
    out = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(np.ceil((hi - lo) / width - 1e-9)))
        out.extend(np.linspace(lo, hi, k + 1)[1:])
    return np.asarray(out)


def _branch_nodes(tf: TestFunction, contour: ContourSpec, h_small: float, refine: int = 1):
    t, w = leggauss(contour.order)
    lo, hi = tf.scaled_support
    lo, hi = max(lo, contour.x_window[0]), min(hi, contour.x_window[1])
    breaks = sorted({lo, hi, *(float(b) for b in tf.scaled_breakpoints if lo < b < hi)})
    min_panels = max(1, int(np.ceil(contour.nodes_per_branch / contour.order)))
    width = min(h_small, tf.eta0 / 8, (hi - lo) / min_panels) / refine
    e = _panel_edges(breaks, width)
    a, b = e[:-1, None], e[1:, None]
    x = ((a + b) / 2 + (b - a) / 2 * t).ravel()
    wx = ((b - a) / 2 * w).ravel()
    return x, wx


class _Branch:
    """Quadrature data on one horizontal line ``Im z = s h``.

    ``wdz`` holds the weights of ``dz``: the upper line is run in the +x
    direction and the lower line in the -x direction.
    """

    def __init__(self, tf, x, wx, s, h):
        z = x + 1j * s * h
        self.z = z
        self.m = stieltjes(z)
        self.dm = self.m * self.m / (1 - self.m * self.m)
        self.ft = almost_analytic(tf, z, order=2)
        self.wdz = s * wx
        self.g = self.wdz * self.ft  # f~ dz


def _branches(tf, contour, h, refine=1):
    x, wx = _branch_nodes(tf, contour, h / 2, refine)
    return [_Branch(tf, x, wx, s, h) for s in (1, -1)], [_Branch(tf, x, wx, s, h / 2) for s in (1, -1)]


def _perron_pair(b1: _Branch, b2: _Branch) -> complex:
    """Pair-grid sum of ``f~ f~' m1' m2' / (1 - m1 m2)**2 dz dz'``."""
    u = b1.g * b1.dm
    v = b2.g * b2.dm
    m2 = b2.m
    total = 0j
    for c in range(0, u.size, _PAIR_CHUNK):
        blk = 1 - b1.m[c:c + _PAIR_CHUNK, None] * m2[None, :]
        total += u[c:c + _PAIR_CHUNK] @ ((1 / (blk * blk)) @ v)
    return complex(total)


def _moments(br: list, kmax: int) -> np.ndarray:
    """``A_k = sum over both lines of f~ m^k m' dz`` for ``k = 0..kmax``."""
    out = np.zeros(kmax + 1, dtype=complex)
    for b in br:
        p = b.g * b.dm
        for k in range(kmax + 1):
            out[k] += np.sum(p)
            p = p * b.m
    return out


def _series_weights(rest: np.ndarray, tol: float = 1e-15, kcap: int = 20000) -> np.ndarray:
    """Coefficients ``(k+1) sum_j lambda_j**(k+1)`` of the non-Perron trace series."""
    if rest.size == 0:
        return np.zeros(0)
    q = float(np.max(np.abs(rest)))
    if q < 1e-13:
        return np.zeros(0)
    if q >= 1 - 1e-6:
        raise NumericError(f"second eigenvalue modulus {q} of S is too close to 1")
    scale = max(1.0, float(np.sum(np.abs(rest))))
    coef = []
    p = rest.copy()
    for k in range(kcap):
        coef.append((k + 1) * np.sum(p))
        if (k + 1) * q ** (k + 1) * rest.size < tol * scale:
            break
        p = p * rest
    else:
        raise ConvergenceError("trace series did not converge")
    return np.asarray(coef)


def _profile_parts(S: VarianceProfile, trace_mode: str):
    if trace_mode == "rank_one":
        if not np.allclose(S.s, 1.0 / S.n, rtol=0, atol=1e-15):
            raise ValueError("rank_one trace mode requires a flat profile")
        return np.zeros(0)
    ev = spectral_data(S).eigenvalues
    return ev[1:]


def _evaluate(tf, S, beta, k4, contour, h, trace_mode, refine=1, want=("V", "B")):
    """Variance and bias (complex, before taking real parts) at heights ``h`` and ``h/2``."""
    G1, G2 = _branches(tf, contour, h, refine)
    trS = float(np.trace(S.s))
    rest = _profile_parts(S, trace_mode)
    V = B = 0j
    if "V" in want:
        if trace_mode == "solve":
            tr = 0j
            for b1 in G1:
                for b2 in G2:
                    for i in range(b1.z.size):
                        if b1.g[i] == 0:
                            continue
                        row = np.array([kernel_trace(S, b1.z[i], z2, "variance") for z2 in b2.z])
                        tr += b1.g[i] * np.sum(b2.g * row)
        else:
            tr = sum(_perron_pair(b1, b2) for b1 in G1 for b2 in G2)
            coef = _series_weights(rest)
            if coef.size:
                A1 = _moments(G1, coef.size - 1)
                A2 = _moments(G2, coef.size - 1)
                tr += np.sum(coef * A1 * A2)
        M1 = _moments(G1, 1)
        M2 = _moments(G2, 1)
        kern = (2 / beta) * tr + 2 * k4 * M1[1] * M2[1] + trS * (1 - 2 / beta) * M1[0] * M2[0]
        V = -kern / (4 * np.pi**2)
    if "B" in want:
        coef_b = 2 / beta - 1
        acc = 0j
        for b in G1:
            m2 = b.m * b.m
            if coef_b != 0:
                if trace_mode == "solve":
                    tr_b = np.array([kernel_trace(S, z, z, "bias") for z in b.z])
                else:
                    lam = rest
                    tail = np.zeros_like(m2)
                    for c in range(0, lam.size, 256):
                        l = lam[c:c + 256]
                        tail += np.sum(l * l / (1 - m2[:, None] * l), axis=1)
                    tr_b = b.dm * b.m**3 * (1 / (1 - m2) + tail)
            else:
                tr_b = 0
            acc += np.sum(b.g * (coef_b * tr_b + k4 * b.dm * b.m**3))
        B = acc / (2j * np.pi)
    return complex(V), complex(B)


def _close(a: complex, b: complex, rtol: float, atol: float) -> bool:
    return abs(a - b) <= max(rtol * abs(b), atol)


def predict(
    tf: TestFunction,
    S: VarianceProfile,
    beta: int,
    k4: float,
    contour: ContourSpec,
    trace_mode: str = "spectral",
    want=("V", "B"),
) -> TheoryPrediction:
    """Evaluate ``V(f)`` and ``B(f)`` on the configured contours.

    Parameters
    ----------
    trace_mode : {"spectral", "solve", "rank_one"}
        How the profile traces are evaluated: through the spectrum of ``S``
        (default), by linear solves at every node pair (small problems
        only), or by the scalar formulas valid for flat profiles.
    """
    if beta not in (1, 2):
        raise ValueError(f"beta must be 1 or 2, got {beta!r}")
    if trace_mode not in ("spectral", "solve", "rank_one"):
        raise ValueError(f"unknown trace_mode {trace_mode!r}")
    h_lit = contour.heights[0]
    history = []
    if contour.height_limit:
        h = min(h_lit, contour.start_ratio * contour.eta0)
        prev = None
        for _ in range(contour.max_halvings + 1):
            cur = _evaluate(tf, S, beta, k4, contour, h, trace_mode, want=want)
            history.append((h, cur[0], cur[1]))
            if prev is not None and _close(cur[0], prev[0], contour.rtol, 1e-12) and _close(
                cur[1], prev[1], contour.rtol, 1e-6
            ):
                break
            prev = cur
            h /= 2
        else:
            raise ConvergenceError(
                f"contour integrals did not settle as the heights shrank: last values {history[-2:]}"
            )
        err = max(abs(cur[0] - prev[0]), abs(cur[1] - prev[1]))
        used = (history[-1][0], history[-1][0] / 2)
    else:
        cur = _evaluate(tf, S, beta, k4, contour, h_lit, trace_mode, want=want)
        fine = _evaluate(tf, S, beta, k4, contour, h_lit, trace_mode, refine=2, want=want)
        history = [(h_lit, cur[0], cur[1]), (h_lit, fine[0], fine[1])]
        err = max(abs(cur[0] - fine[0]), abs(cur[1] - fine[1]))
        cur = fine
        used = contour.heights
    V, B = cur
    resid = max(abs(V.imag), abs(B.imag))
    if abs(V.imag) > 1e-6 * max(abs(V.real), 1e-12) or abs(B.imag) > 1e-6 * max(abs(B.real), 1e-6):
        raise NumericError(f"imaginary residue too large: V={V}, B={B}")
    return TheoryPrediction(
        variance=float(V.real),
        bias=float(B.real),
        k4_used=float(k4),
        quadrature_error_estimate=float(err),
        tau=contour.tau,
        heights=tuple(float(v) for v in used),
        height_limit=contour.height_limit,
        imag_residue=float(resid),
        history=tuple(history),
    )


def variance_Vf(tf, S, beta, k4, contour, trace_mode: str = "spectral") -> float:
    """Variance functional ``V(f)``; see :func:`predict`."""
    return predict(tf, S, beta, k4, contour, trace_mode, want=("V",)).variance


def bias_Bf(tf, S, beta, k4, contour, trace_mode: str = "spectral") -> float:
    """Bias functional ``B(f)``; see :func:`predict`."""
    if beta == 2 and k4 == 0:
        return 0.0
    return predict(tf, S, beta, k4, contour, trace_mode, want=("B",)).bias


def fourier_transform(h, xi, support, breakpoints=(), order: int = 20) -> np.ndarray:
    """``(2 pi)**-1/2 int h(x) exp(-i xi x) dx`` by composite Gauss-Legendre quadrature."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lo, hi = support
    breaks = sorted({lo, hi, *(b for b in breakpoints if lo < b < hi)})
    width = min(hi - lo, 8.0 / max(float(np.max(np.abs(xi))), 1e-12))
    e = _panel_edges(breaks, width)
    t, w = leggauss(order)
    a, b = e[:-1, None], e[1:, None]
    x = ((a + b) / 2 + (b - a) / 2 * t).ravel()
    wx = ((b - a) / 2 * w).ravel()
    hw = h(x) * wx
    out = np.empty(xi.size, dtype=complex)
    for c in range(0, xi.size, 2048):
        ph = xi[c:c + 2048, None] * x[None, :]
        out[c:c + 2048] = (np.cos(ph) @ hw) - 1j * (np.sin(ph) @ hw)
    return out / np.sqrt(2 * np.pi)


def _abs_xi_energy(h, support, breakpoints, tol: float = 1e-7, max_doublings: int = 14) -> float:
    """``int_R |xi| |h^(xi)|**2 d xi`` with adaptive truncation of the xi range."""
    L = support[1] - support[0]
    t, w = leggauss(16)

    def band(a, b):
        n = max(1, int(np.ceil((b - a) * L / np.pi)))
        e = np.linspace(a, b, n + 1)
        lo, hi = e[:-1, None], e[1:, None]
        xi = ((lo + hi) / 2 + (hi - lo) / 2 * t).ravel()
        wxi = ((hi - lo) / 2 * w).ravel()
        hh = fourier_transform(h, xi, support, breakpoints)
        return 2 * float(np.sum(wxi * xi * np.abs(hh) ** 2))

    cut = 16 * np.pi / L
    total = band(0.0, cut)
    for _ in range(max_doublings):
        inc = band(cut, 2 * cut)
        total += inc
        cut *= 2
        if abs(inc) < tol * max(abs(total), 1e-300):
            return total
    raise NumericError(f"Fourier tail did not fall below tolerance up to xi = {cut:.3g}")


def bulk_limit(g: TestFunction, beta: int) -> float:
    """Universal bulk variance ``(1/(beta pi)) int |xi| |g^(xi)|**2 d xi``.

    Only the profile ``g`` matters; ``E0`` and ``eta0`` are ignored.
    """
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    val = _abs_xi_energy(g.g, g.support, g.breakpoints)
    return val / (beta * np.pi)


def _edge_profile(g: TestFunction, side: int):
    sgn = -1.0 if side == 2 else 1.0  # h(x) = g(-x^2) at +2, g(x^2) at -2
    a, b = g.support
    # values of x with sgn * x^2 inside [a, b]
    lim = -a if side == 2 else b
    if lim <= 0:
        return None
    r = float(np.sqrt(lim))
    bps = [0.0]
    for p in g.breakpoints:
        if sgn * p > 0:
            q = float(np.sqrt(sgn * p))
            bps += [q, -q]

    def h(x):
        return g.g(sgn * np.asarray(x) ** 2)

    return h, (-r, r), tuple(bps)


def edge_limit(g: TestFunction, beta: int, side: int) -> tuple:
    """Edge limits ``(mean, variance)`` at the spectral edge ``side`` in {+2, -2}.

    ``mean = (2/beta - 1) g(0)/4`` and
    ``variance = (1/(2 beta pi)) int |xi| |h^(xi)|**2`` with
    ``h(x) = g(-x**2)`` at ``+2`` and ``g(x**2)`` at ``-2``.
    """
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    if side not in (2, -2):
        raise ValueError("side must be +2 or -2")
    mean = (2 / beta - 1) * float(g.g(0.0)) / 4
    prof = _edge_profile(g, side)
    if prof is None:
        return mean, 0.0
    h, sup, bps = prof
    var = _abs_xi_energy(h, sup, bps) / (2 * beta * np.pi)
    return mean, var
