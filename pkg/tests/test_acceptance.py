"""End-to-end acceptance criteria at their stated sizes and tolerances.

Each test records a one-line PASS/FAIL verdict (printed in the terminal
summary) and then asserts it.  Monte Carlo runs use
``WIGNER_CLT_THREADS`` workers when set, else up to 8.
"""
import json
import os
import time

import numpy as np
import pytest

from wigner_clt.cli import COMMANDS, main
from wigner_clt.ensemble import EnsembleSpec, sample
from wigner_clt.harness import ExperimentConfig, local_law_survey, run_experiment
from wigner_clt.locallaw import check_T_laws, check_trace_identities, pass_band
from wigner_clt.profile import KERNELS, build_flat, build_from_kernel, kernel_trace, t_theory_matrix
from wigner_clt.semicircle import kappa, stieltjes
from wigner_clt.spectral import bump, eigenvalues, trace_f_hs
from wigner_clt.theory import ContourSpec, bulk_limit, predict

from .oracles import admissible_pairs, flat_trace_oracle

pytestmark = pytest.mark.acceptance

THREADS = int(os.environ.get("WIGNER_CLT_THREADS") or min(8, os.cpu_count() or 1))

_runs = {}


def _mc(N=400, M=2000, E0=0.0, eta0=0.5, beta=1, dist="gaussian", seed=2024):
    key = (N, M, E0, eta0, beta, dist, seed)
    if key not in _runs:
        cfg = ExperimentConfig(N=N, M=M, test_function=bump(E0, eta0), beta=beta, dist=dist,
                               seed=seed, threads=THREADS)
        _runs[key] = run_experiment(cfg)
    return _runs[key]


def test_criterion_01_semicircle(verdict):
    t0 = time.perf_counter()
    E, eta = np.meshgrid(np.linspace(-5, 5, 100), np.geomspace(1e-4, 10, 100))
    z = (E + 1j * eta).ravel()
    m = stieltjes(z)
    residual = float(np.max(np.abs(m * m + z * m + 1)))
    branch = bool(np.all(m.imag > 0))

    inner = np.abs(z.real) <= 2
    root = np.sqrt(kappa(z.real[inner]) + z.imag[inner])
    r_im = m[inner].imag / root
    r_gap = np.abs(1 - m[inner] ** 2) / root
    bands = bool(np.all((r_im >= 1 / 3) & (r_im <= 3) & (r_gap >= 1 / 3) & (r_gap <= 3)))

    h = 1e-4 * np.minimum(z.imag, kappa(z.real) + z.imag)
    fd_err = 0.0
    for order in (1, 2):
        fd = (stieltjes(z + h, order - 1) - stieltjes(z - h, order - 1)) / (2 * h)
        exact = stieltjes(z, order)
        fd_err = max(fd_err, float(np.max(np.abs(fd - exact) / np.abs(exact))))
    elapsed = time.perf_counter() - t0

    ok = residual < 1e-12 and branch and bands and fd_err < 1e-6 and elapsed < 5
    verdict(1, ok, f"residual {residual:.1e}, branch {branch}, "
                   f"Im m/sqrt(k+eta) in [{r_im.min():.3f}, {r_im.max():.3f}], "
                   f"|1-m^2|/sqrt(k+eta) in [{r_gap.min():.3f}, {r_gap.max():.3f}] (band [1/3, 3]), "
                   f"fd {fd_err:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_rank_one_oracle(verdict):
    t0 = time.perf_counter()
    n = 40
    S = build_flat(n)
    worst = 0.0
    for z, zp in admissible_pairs(20):
        for kind in ("variance", "bias", "t_trace"):
            want = flat_trace_oracle(kind, z, zp)
            worst = max(worst, abs(kernel_trace(S, z, zp, kind) - want) / abs(want))
        m1, m2 = stieltjes(z), stieltjes(zp)
        want = m1**2 * m2**2 / (n * (1 - m1 * m2))
        worst = max(worst, float(np.max(np.abs(t_theory_matrix(S, z, zp) - want))) / abs(want))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 5
    verdict(2, ok, f"max relative error {worst:.1e} over 20 pairs, {elapsed:.2f}s")
    assert ok


def test_criterion_03_helffer_sjostrand(verdict):
    t0 = time.perf_counter()
    H = sample(EnsembleSpec(1, "gaussian", build_flat(200), seed=3))
    tf = bump(0.0, 0.5)
    want = float(np.sum(tf.f(eigenvalues(H))))
    got = trace_f_hs(H, tf)
    rel = abs(got - want) / abs(want)
    elapsed = time.perf_counter() - t0
    ok = rel < 1e-3 and elapsed < 120
    verdict(3, ok, f"relative error {rel:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_04_bulk_limit(verdict):
    t0 = time.perf_counter()
    N = 2000
    tf = bump(0.0, N**-0.3)
    V = predict(tf, build_flat(N), 1, 0.0, ContourSpec.for_function(tf, N), want=("V",)).variance
    limit = bulk_limit(bump(), 1)
    rel = abs(V - limit) / limit
    elapsed = time.perf_counter() - t0
    ok = rel < 0.10 and elapsed < 300
    verdict(4, ok, f"V {V:.5f} vs bulk limit {limit:.5f}, relative gap {rel:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_05_clt_monte_carlo(verdict):
    t0 = time.perf_counter()
    r = _mc()
    elapsed = time.perf_counter() - t0
    row = next(c for c in r.char_table if c["lambda"] == 1.0)
    cf_gap = abs(abs(complex(row["re"], row["im"])) - row["gaussian"])
    cf_tol = 3 * max(row["se_re"], row["se_im"]) + 0.02
    ok = (0.85 <= r.variance_ratio <= 1.15 and r.ks_p > 0.01 and abs(r.bias_zscore) <= 3
          and cf_gap <= cf_tol and elapsed < 1800)
    verdict(5, ok, f"variance ratio {r.variance_ratio:.3f}, KS p {r.ks_p:.3f}, "
                   f"mean {r.mean:.4f} vs B {r.theory_bias:.4f} ({r.bias_zscore:+.2f} SE), "
                   f"|phi(1)| gap {cf_gap:.4f} <= {cf_tol:.4f}, {elapsed:.0f}s on {THREADS} thread(s)")
    assert ok


def test_criterion_06_beta_scaling(verdict):
    r1 = _mc(beta=1)
    r2 = _mc(beta=2)
    ratio = r1.variance / r2.variance
    ok = abs(ratio - 2) <= 0.3
    verdict(6, ok, f"empirical variance ratio beta=1/beta=2 {ratio:.3f} "
                   f"(theory {r1.theory_variance / r2.theory_variance:.3f})")
    assert ok


def test_criterion_07_fourth_cumulant(verdict):
    g = _mc(eta0=1.0)
    rad = _mc(eta0=1.0, dist="rademacher")
    emp = rad.variance - g.variance
    th = rad.theory_variance - g.theory_variance
    ok = np.sign(emp) == np.sign(th) and abs(emp - th) <= 0.5 * abs(th)
    verdict(7, ok, f"variance difference empirical {emp:+.4f} vs theory {th:+.4f} (k4 {rad.k4:+.3f})")
    assert ok


def test_criterion_08_edge_mean(verdict):
    N = 1000
    r = _mc(N=N, E0=2.0, eta0=N**-0.4)
    g0 = float(bump().g(0.0))
    tol = 3 * r.mean_se + 0.15 * abs(g0)
    ok = abs(r.mean - g0 / 4) <= tol
    verdict(8, ok, f"mean {r.mean:.4f} +- {r.mean_se:.4f} vs g(0)/4 = {g0 / 4:.4f} "
                   f"(tolerance {tol:.4f}; finite-N theory B {r.theory_bias:.4f})")
    assert ok


def test_criterion_09_local_laws(verdict):
    _, summary = local_law_survey([250, 500, 1000, 2000], samples=20, seed=11, threads=THREADS)
    growth = [p["growth"] for p in summary["per_N"] if p["growth"] is not None]
    worst = max(max(p["max_ratio"].values()) / p["band"] for p in summary["per_N"])
    ok = summary["all_passed"] and max(growth) <= 1.5
    verdict(9, ok, f"max ratio/band {worst:.3f}, median entrywise growth per doubling "
                   f"{', '.join(f'{x:.3f}' for x in growth)}")
    assert ok


def test_criterion_10_two_point_function(verdict):
    N = 1000
    z = 0.2 + 0.1j
    zp = z.conjugate()
    m1, m2 = stieltjes(z), stieltjes(zp)
    parts = []
    ok = True
    for name, S in (("flat", build_flat(N)), ("cosine", build_from_kernel(N, KERNELS["cosine"]()))):
        H = sample(EnsembleSpec(1, "gaussian", S, seed=10))
        rep = check_T_laws(H, S, z, zp)
        t1 = check_trace_identities(H, S, z, zp)["T1"].deviation
        T = t_theory_matrix(S, z, zp)
        s2 = S.s @ S.s
        rel = float(np.max(np.abs(T - m1 * m2 * S.s @ T - m1**2 * m2**2 * s2)) / np.max(np.abs(m1**2 * m2**2 * s2)))
        good = rep.passed() and t1 < 1e-10 and rel < 1e-10
        ok &= good
        worst = max(rep.ratios.values())
        parts.append(f"{name}: max ratio {worst:.3f} (band {pass_band(N):.3f}), T1 {t1:.1e}, limit relation {rel:.1e}")
    verdict(10, ok, "; ".join(parts))
    assert ok


def test_criterion_11_reproducibility(tmp_path, monkeypatch, verdict):
    cfg = {
        "N": 120,
        "seed": 9,
        "profile": {"type": "kernel", "kernel": "cosine", "export": True},
        "test_function": {"name": "bump", "E0": 0.2, "eta0": 0.6},
        "mc": {"M": 200},
        "locallaw": {"N_list": [60, 120], "samples": 3},
        "sweep": {"N_list": [60, 120], "M": 120},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))

    def run(tag, threads):
        monkeypatch.setenv("WIGNER_CLT_THREADS", str(threads))
        files = {}
        for cmd in COMMANDS:
            out = tmp_path / tag / cmd
            assert main([cmd, "--config", str(path), "--out", str(out)]) in (0, 1)
            files.update({f"{cmd}/{f.name}": f.read_bytes() for f in sorted(out.iterdir())})
        return files

    a, b, c = run("a", 1), run("b", 1), run("c", 8)
    same_twice = a == b
    same_threads = a == c
    ok = same_twice and same_threads and len(a) >= len(COMMANDS)
    verdict(11, ok, f"{len(a)} artifacts from {len(COMMANDS)} commands; identical across runs {same_twice}, "
                    f"threads 1 vs 8 {same_threads}")
    assert ok
