"""Independent closed forms used as test oracles."""
import numpy as np


def m_quadratic(z):
    """Semicircle transform from the quadratic formula with an explicit root test."""
    z = complex(z)
    r = np.sqrt(z * z - 4 + 0j)
    roots = ((-z + r) / 2, (-z - r) / 2)
    return next(m for m in roots if m.imag * z.imag > 0)


def m_prime(z):
    m = m_quadratic(z)
    # implicit differentiation of m^2 + z m + 1 = 0
    return -m / (2 * m + z)


def flat_trace_oracle(kind, z, zp):
    """Rank-one reduction of the trace functionals for the flat profile."""
    m1, m2 = m_quadratic(z), m_quadratic(zp)
    d1, d2 = m_prime(z), m_prime(zp)
    if kind == "variance":
        return d1 * d2 / (1 - m1 * m2) ** 2
    if kind == "bias":
        return d1 * m1**3 / (1 - m1 * m1)
    return m1**2 * m2**2 / (1 - m1 * m2)


def admissible_pairs(count, seed=1):
    """Deterministic pairs (z, zp) with z in D and zp or its conjugate in D."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        z = complex(rng.uniform(-3, 3), rng.uniform(0.01, 2))
        zp = complex(rng.uniform(-3, 3), rng.uniform(0.01, 2))
        out.append((z, zp if k % 2 else zp.conjugate()))
    return out


def chebyshev_coefficients(f, K, breakpoints=()):
    """Coefficients ``a_k`` of ``f(2 cos t) = sum_k a_k cos(k t)`` (``a_0`` counted once with weight 2/pi)."""
    from scipy.integrate import quad

    pts = [float(np.arccos(p / 2)) for p in breakpoints if -2 < p < 2] or None
    return np.array([
        2 / np.pi * quad(lambda t: f(2 * np.cos(t)) * np.cos(k * t), 0, np.pi,
                         points=pts, limit=500, epsabs=1e-13, epsrel=1e-13)[0]
        for k in range(K)
    ])


def flat_global_moments(f, beta, k4, K=60, breakpoints=()):
    """Limiting variance and mean of ``Tr f(H) - N int f rho_sc`` for flat Wigner matrices.

    Classical Chebyshev-expansion formulas for Wigner matrices with unit
    off-diagonal variance, diagonal variance ``1/N`` and fourth-cumulant sum
    ``k4``; valid for ``f`` vanishing at the edges.
    """
    a = chebyshev_coefficients(f, K, breakpoints)
    k = np.arange(K)
    var = np.sum(k * a * a) / (2 * beta) + (1 - 2 / beta) * a[1] ** 2 / 4 + k4 * a[2] ** 2 / 2
    mean = (2 / beta - 1) * (-a[0] / 4 - a[2] / 2) + k4 * a[4] / 2
    return var, mean


def half_derivative_energy(h, lo, hi):
    """``int |xi| |h^(xi)|^2 d xi`` for ``h`` supported in ``[lo, hi]``.

    Uses ``(1/2pi) int int ((h(x) - h(y))/(x - y))^2 dx dy`` with the part
    outside the support integrated in closed form.
    """
    from scipy.integrate import dblquad, quad

    def inner(y, x):
        return 0.0 if x == y else ((h(x) - h(y)) / (x - y)) ** 2

    a, _ = dblquad(inner, lo, hi, lambda x: lo, lambda x: hi, epsabs=1e-12, epsrel=1e-12)
    b, _ = quad(lambda x: 2 * h(x) ** 2 * (1 / (hi - x) + 1 / (x - lo)), lo, hi, epsabs=1e-13, epsrel=1e-13)
    return (a + b) / (2 * np.pi)
