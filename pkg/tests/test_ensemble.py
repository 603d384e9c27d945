import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wigner_clt.ensemble import (
    DISTRIBUTIONS,
    EnsembleSpec,
    draw_standard,
    excess_kurtosis,
    fourth_cumulant_sum,
    sample,
    sample_rng,
)
from wigner_clt.profile import KERNELS, build_flat, build_from_kernel

P = 0.2


def _p(dist):
    return P if dist == "shifted_bernoulli" else None


@pytest.mark.parametrize("beta", [1, 2])
@pytest.mark.parametrize("dist", DISTRIBUTIONS)
def test_hermitian_exactly(beta, dist):
    H = sample(EnsembleSpec(beta, dist, build_flat(30), seed=5, p=_p(dist)), 3)
    assert np.max(np.abs(H - H.conj().T)) == 0
    assert np.all(np.diagonal(H).imag == 0)


def test_determinism():
    spec = EnsembleSpec(2, "gaussian", build_flat(20), seed=11)
    assert np.array_equal(sample(spec, 4), sample(spec, 4))
    assert not np.array_equal(sample(spec, 4), sample(spec, 5))


def test_seed_changes_sample():
    S = build_flat(10)
    assert not np.array_equal(sample(EnsembleSpec(1, "gaussian", S, 1)), sample(EnsembleSpec(1, "gaussian", S, 2)))


def test_entry_variance_gaussian_flat():
    spec = EnsembleSpec(1, "gaussian", build_flat(200), seed=0)
    x = np.array([sample(spec, i)[0, 1] for i in range(10_000)])
    assert abs(x.var() * 200 - 1) < 0.05


def test_beta2_pseudo_variance_and_independence():
    spec = EnsembleSpec(2, "gaussian", build_flat(20), seed=0)
    x = np.array([sample(spec, i)[2, 7] for i in range(10_000)]) * np.sqrt(20)
    sq = x * x
    se = np.sqrt(np.var(sq.real) / x.size)
    assert abs(sq.real.mean()) <= 3 * se
    assert abs(sq.imag.mean()) <= 3 * np.sqrt(np.var(sq.imag) / x.size)
    prod = x.real * x.imag
    assert abs(prod.mean()) <= 5 * prod.std() / np.sqrt(x.size)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1, abs=0.05)


def test_profile_variances_respected():
    S = build_from_kernel(12, KERNELS["block"](4.0))
    spec = EnsembleSpec(1, "rademacher", S, seed=3)
    # Rademacher entries have |H_ij|^2 = s_ij exactly
    assert np.allclose(sample(spec) ** 2, S.s, rtol=1e-14, atol=0)


@pytest.mark.parametrize("dist", DISTRIBUTIONS)
def test_moment_matching(dist):
    x = draw_standard(sample_rng(42, 0), dist, 100_000, _p(dist))
    n = x.size
    m4 = 3 + excess_kurtosis(dist, _p(dist))
    assert abs(x.mean()) <= 5 * x.std() / np.sqrt(n)
    assert abs(np.mean(x * x) - 1) <= 5 * np.std(x * x) / np.sqrt(n)
    assert abs(np.mean(x**4) - m4) <= 5 * np.std(x**4) / np.sqrt(n)


def test_excess_kurtosis_values():
    assert excess_kurtosis("gaussian") == 0
    assert excess_kurtosis("rademacher") == -2
    assert excess_kurtosis("uniform") == pytest.approx(-1.2)
    q = P * (1 - P)
    assert excess_kurtosis("shifted_bernoulli", P) == pytest.approx((1 - 6 * q) / q)


def test_invalid_arguments():
    S = build_flat(3)
    with pytest.raises(ValueError):
        EnsembleSpec(1, "shifted_bernoulli", S, p=1.5)
    with pytest.raises(ValueError):
        EnsembleSpec(1, "shifted_bernoulli", S)
    with pytest.raises(ValueError):
        EnsembleSpec(3, "gaussian", S)
    with pytest.raises(ValueError):
        EnsembleSpec(1, "cauchy", S)
    with pytest.raises(ValueError):
        EnsembleSpec(1, "gaussian", S, seed=-1)


@pytest.mark.parametrize("n", [1, 7, 64])
def test_k4_examples(n):
    assert fourth_cumulant_sum(EnsembleSpec(1, "gaussian", build_flat(n))) == 0
    assert fourth_cumulant_sum(EnsembleSpec(1, "rademacher", build_flat(n))) == pytest.approx(-2)


def test_k4_kernel_profile():
    S = build_from_kernel(64, KERNELS["cosine"]())
    assert fourth_cumulant_sum(EnsembleSpec(1, "rademacher", S)) == pytest.approx(-2 * np.sum(S.s**2))


def test_k4_beta2_and_mixed_diagonal():
    n = 10
    S = build_flat(n)
    # off-diagonal: two components of variance 1/(2n) each; diagonal: one of variance 1/n
    want = -2 * (n * (n - 1) / n**2 / 2 + n / n**2)
    assert fourth_cumulant_sum(EnsembleSpec(2, "rademacher", S)) == pytest.approx(want)
    mixed = EnsembleSpec(1, "rademacher", S, diag_dist="gaussian")
    assert fourth_cumulant_sum(mixed) == pytest.approx(-2 * (n - 1) / n)


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**9))
@settings(max_examples=30, deadline=None)
def test_keyed_stream_reproducible(seed, index):
    a = sample_rng(seed, index).random(4)
    b = sample_rng(seed, index).random(4)
    assert np.array_equal(a, b)
