import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wigner_clt.exceptions import ConstructionError, ConvergenceError, DomainError, NearSingularityError
from wigner_clt.profile import (
    KERNELS,
    VarianceProfile,
    build_flat,
    build_from_kernel,
    kernel_trace,
    load_profile,
    save_profile,
    spectral_data,
    stability_report,
    t_theory_matrix,
    validate,
)
from wigner_clt.semicircle import stieltjes

from .oracles import admissible_pairs, flat_trace_oracle

COSINE = KERNELS["cosine"](0.5)


@pytest.fixture(scope="module")
def cosine64():
    return build_from_kernel(64, COSINE)


@pytest.fixture(scope="module")
def test_profiles(cosine64):
    return [build_flat(64), cosine64, build_from_kernel(64, KERNELS["exponential"]()),
            build_from_kernel(64, KERNELS["block"]())]


def test_flat_examples():
    assert np.all(build_flat(4).s == 0.25)
    assert np.all(build_flat(4).s.sum(axis=1) == 1)
    assert build_flat(1).s.tolist() == [[1.0]]
    S = build_flat(1000)
    assert S.c_inf == pytest.approx(1) and S.c_sup == pytest.approx(1)


def test_profile_is_read_only():
    S = build_flat(3)
    with pytest.raises(ValueError):
        S.s[0, 0] = 1


def test_constant_kernel_gives_flat():
    S = build_from_kernel(17, lambda x, y: np.ones_like(x * y))
    assert np.allclose(S.s, build_flat(17).s, rtol=0, atol=1e-15)


def test_cosine_kernel_row_sums(cosine64):
    assert np.max(np.abs(cosine64.s.sum(axis=1) - 1)) < 1e-10
    assert validate(cosine64).passed


def test_ratio_four_kernel_flatness():
    S = build_from_kernel(128, KERNELS["block"](4.0))
    assert S.c_sup / S.c_inf <= 4 * (1 + 1e-6)


@pytest.mark.parametrize("name", sorted(KERNELS))
@pytest.mark.parametrize("n", [5, 33, 100])
def test_kernel_profiles_valid(name, n):
    rep = validate(build_from_kernel(n, KERNELS[name]()))
    assert rep.passed
    assert rep.max_row_deviation <= 1e-12
    assert rep.asymmetry == 0


def test_nonpositive_kernel_rejected():
    with pytest.raises(ConstructionError):
        build_from_kernel(8, lambda x, y: x - y)


def test_sinkhorn_iteration_cap():
    with pytest.raises(ConvergenceError):
        build_from_kernel(50, KERNELS["exponential"](0.05, 0.01), max_iter=1)


def test_validate_detects_scaled_row():
    s = build_flat(10).s.copy()
    s[3] *= 1.01
    rep = validate(VarianceProfile(s))
    assert not rep.passed and not rep.normalized and not rep.symmetric
    assert rep.max_row_deviation == pytest.approx(0.01)


def test_validate_flat():
    rep = validate(build_flat(9))
    assert rep.passed
    assert rep.max_row_deviation < 1e-15


def test_constructor_rejects_bad_input():
    with pytest.raises(ConstructionError):
        VarianceProfile(np.ones((2, 3)))
    with pytest.raises(ConstructionError):
        VarianceProfile([[-1.0]])


def test_spectral_data_flat():
    sd = spectral_data(build_flat(8))
    assert sd.eigenvalues[0] == pytest.approx(1, abs=1e-12)
    assert np.allclose(sd.eigenvalues[1:], 0, atol=1e-12)
    assert sd.gap_plus == pytest.approx(1) and sd.gap_minus == pytest.approx(1)


def test_spectral_gaps_and_perron(test_profiles):
    for S in test_profiles:
        sd = spectral_data(S)
        assert abs(sd.eigenvalues[0] - 1) < 1e-10
        assert min(sd.gap_plus, sd.gap_minus) >= S.c_inf - 1e-12
        assert np.max(np.abs(sd.eigenvalues[1:])) <= 1 - S.c_inf + 1e-8


def test_spectral_data_rejects_unnormalized():
    with pytest.raises(ValueError):
        spectral_data(VarianceProfile(np.full((3, 3), 0.5)))


@pytest.mark.parametrize("kind", ["variance", "bias", "t_trace"])
def test_rank_one_kernel_trace(kind):
    S = build_flat(40)
    for z, zp in admissible_pairs(20):
        got = kernel_trace(S, z, zp, kind)
        want = flat_trace_oracle(kind, z, zp)
        assert abs(got - want) <= 1e-10 * abs(want)


def test_kernel_trace_matches_eigendecomposition(cosine64):
    lam, U = np.linalg.eigh(cosine64.s)
    z, zp = 0.3 + 0.2j, -0.7 - 0.1j
    m1, m2 = stieltjes(z), stieltjes(zp)
    d1, d2 = stieltjes(z, 1), stieltjes(zp, 1)
    want = d1 * d2 * np.sum(lam / (1 - m1 * m2 * lam) ** 2)
    assert abs(kernel_trace(cosine64, z, zp, "variance") - want) < 1e-10 * abs(want)
    want = d1 * m1**3 * np.sum(lam**2 / (1 - m1 * m1 * lam))
    assert abs(kernel_trace(cosine64, z, zp, "bias") - want) < 1e-10 * abs(want)


def test_kernel_trace_unknown_kind():
    with pytest.raises(ValueError):
        kernel_trace(build_flat(3), 1j, 1j, "other")


def test_t_theory_flat():
    n = 12
    S = build_flat(n)
    z, zp = 0.2 + 0.1j, 0.2 - 0.1j
    m1, m2 = stieltjes(z), stieltjes(zp)
    T = t_theory_matrix(S, z, zp)
    assert np.allclose(T, m1**2 * m2**2 / (n * (1 - m1 * m2)), rtol=1e-12, atol=0)


def test_t_theory_trace_and_symmetry(cosine64):
    z, zp = 0.5 + 0.3j, -1.2 + 0.05j
    T = t_theory_matrix(cosine64, z, zp)
    assert np.trace(T) == pytest.approx(kernel_trace(cosine64, z, zp, "t_trace"), rel=1e-12)
    w = 0.4 + 0.2j
    assert np.allclose(t_theory_matrix(cosine64, w, w.conjugate()),
                       np.conj(t_theory_matrix(cosine64, w.conjugate(), w)), rtol=1e-13, atol=0)


def test_t_theory_self_consistency(cosine64):
    z, zp = 0.2 + 0.1j, 0.2 - 0.1j
    m1, m2 = stieltjes(z), stieltjes(zp)
    T = t_theory_matrix(cosine64, z, zp)
    s = cosine64.s
    lhs = T - m1 * m2 * s @ T
    assert np.max(np.abs(lhs - m1**2 * m2**2 * s @ s)) < 1e-10 * np.max(np.abs(s @ s))


def test_near_singularity():
    S = build_flat(4)
    with pytest.raises(NearSingularityError):
        S._lu(1.0)


def test_stability_constants_bounded(test_profiles):
    for S in test_profiles:
        for z, zp in admissible_pairs(20):
            rep = stability_report(S, z, zp)
            assert rep.norm_ratio <= 10
            assert rep.projected_norm <= 10
            assert rep.rho >= 0.5 and rep.rho_ok


def test_stability_flat_at_i():
    rep = stability_report(build_flat(30), 1j, 1j)
    m = stieltjes(1j)
    assert rep.rho * abs(1 - m * m) <= 10
    assert rep.projected_norm < 1e-12 + 2


def test_stability_domain():
    with pytest.raises(DomainError):
        stability_report(build_flat(3), 20 + 1j, 1j)


def test_save_load_round_trip(tmp_path, cosine64):
    p = tmp_path / "S.txt"
    save_profile(cosine64, p)
    assert p.read_text().splitlines()[0] == "64"
    assert load_profile(p) == cosine64


def test_load_malformed(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("3\n1 2\n")
    with pytest.raises(ConstructionError):
        load_profile(p)


@given(st.integers(2, 40), st.floats(0.0, 0.9), st.floats(0.05, 2.0))
@settings(max_examples=25, deadline=None)
def test_cosine_family_doubly_stochastic(n, a, period):
    S = build_from_kernel(n, lambda x, y: 1 + a * np.cos(np.pi * (x - y) / period))
    assert np.max(np.abs(S.s.sum(axis=1) - 1)) <= 1e-12
    assert np.array_equal(S.s, S.s.T)
