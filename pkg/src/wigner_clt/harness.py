"""Monte Carlo experiments for the CLT and the local laws.

This is the only module that runs work in parallel.  Every sample draws
from a generator keyed by ``(seed, sample index)`` and results are gathered
in index order, so the outcome does not depend on the number of workers.
BLAS is limited to one thread inside the workers, which keeps the floating
point reductions identical between serial and parallel runs.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from .ensemble import EnsembleSpec, fourth_cumulant_sum, sample
from .exceptions import NumericError
from .locallaw import (
    check_resolvent_laws,
    default_test_vectors,
    pass_band,
    probe_grid,
    rho_of,
)
from .profile import VarianceProfile, build_flat
from .spectral import TestFunction, eigenvalues, resolvent_family, sc_expectation
from .theory import ContourSpec, TheoryPrediction, predict

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ordered_map",
    "run_experiment",
    "ks_normality",
    "char_function_check",
    "convergence_sweep",
    "local_law_survey",
]


def ordered_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """``[fn(x) for x in items]`` on ``threads`` workers, results in input order."""
    items = list(items)
    with threadpool_limits(limits=1):
        if threads <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one Monte Carlo CLT experiment.

    ``profile`` may be a fixed :class:`VarianceProfile` of size ``N``, a
    callable ``n -> VarianceProfile`` (used by sweeps over ``N``), or
    ``None`` for the flat profile.
    """

    N: int
    M: int
    test_function: TestFunction
    beta: int = 1
    dist: str = "gaussian"
    diag_dist: str | None = None
    p: float | None = None
    profile: object = None
    seed: int = 0
    tau: float | None = None
    threads: int = 1
    lambdas: tuple = (0.5, 1.0, 2.0)
    contour_options: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        if self.M < 100:
            raise ValueError(f"M must be at least 100, got {self.M}")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        # raises HypothesisViolation when the scale hypothesis fails
        self.contour()

    def build_profile(self) -> VarianceProfile:
        if self.profile is None:
            return build_flat(self.N)
        if isinstance(self.profile, VarianceProfile):
            if self.profile.n != self.N:
                raise ValueError(f"profile has n={self.profile.n} but N={self.N}")
            return self.profile
        return self.profile(self.N)

    def ensemble(self, profile: VarianceProfile | None = None) -> EnsembleSpec:
        return EnsembleSpec(self.beta, self.dist, profile or self.build_profile(), self.seed,
                            diag_dist=self.diag_dist, p=self.p)

    def contour(self) -> ContourSpec:
        return ContourSpec.for_function(self.test_function, self.N, self.tau, **self.contour_options)


@dataclass
class ExperimentResult:
    """Per-sample statistics, their moments, theory and goodness-of-fit tests."""

    config: ExperimentConfig
    raw: np.ndarray
    centered: np.ndarray
    sc_expectation: float
    n_failed: int
    mean: float
    mean_se: float
    variance: float
    variance_se: float
    skewness: float
    skewness_se: float
    excess_kurtosis: float
    kurtosis_se: float
    k4: float
    prediction: TheoryPrediction
    ks_D: float
    ks_p: float
    char_table: list

    @property
    def theory_variance(self) -> float:
        return self.prediction.variance

    @property
    def theory_bias(self) -> float:
        return self.prediction.bias

    @property
    def variance_ratio(self) -> float:
        return self.variance / self.prediction.variance

    @property
    def bias_zscore(self) -> float:
        return (self.mean - self.prediction.bias) / self.mean_se

    def summary(self) -> dict:
        c = self.config
        tf = c.test_function
        return {
            "N": c.N,
            "M": c.M,
            "beta": c.beta,
            "dist": c.dist,
            "seed": c.seed,
            "test_function": {"name": tf.name, "E0": tf.E0, "eta0": tf.eta0},
            "n_failed": self.n_failed,
            "sc_expectation": self.sc_expectation,
            "mean": self.mean,
            "mean_se": self.mean_se,
            "variance": self.variance,
            "variance_se": self.variance_se,
            "skewness": self.skewness,
            "skewness_se": self.skewness_se,
            "excess_kurtosis": self.excess_kurtosis,
            "kurtosis_se": self.kurtosis_se,
            "k4": self.k4,
            "theory": self.prediction.to_dict(),
            "variance_ratio": self.variance_ratio,
            "bias_zscore": self.bias_zscore,
            "ks_D": self.ks_D,
            "ks_p": self.ks_p,
            "char_function": self.char_table,
        }


def ks_normality(samples, min_samples: int = 5) -> tuple:
    """Kolmogorov-Smirnov statistic against N(0, 1) and its asymptotic p-value."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {n}")
    cdf = stats.norm.cdf(x)
    i = np.arange(1, n + 1)
    D = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    p = float(stats.kstwobign.sf(np.sqrt(n) * D))
    return D, p


def char_function_check(samples, Vf: float, lambdas) -> list:
    """Empirical characteristic function against the Gaussian ``exp(-lambda^2 V/2)``.

    ``samples`` are expected to be centered.  Each row carries the real and
    imaginary parts, their standard errors and the Gaussian prediction.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    rows = []
    for lam in lambdas:
        c, s = np.cos(lam * x), np.sin(lam * x)
        rows.append({
            "lambda": float(lam),
            "re": float(c.mean()),
            "im": float(s.mean()),
            "se_re": float(c.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan"),
            "se_im": float(s.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan"),
            "gaussian": float(np.exp(-lam * lam * Vf / 2)),
        })
    return rows


def _moments(x: np.ndarray) -> dict:
    M = x.size
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    m4 = float(np.mean((x - mean) ** 4))
    skew_se = np.sqrt(6 * M * (M - 1) / ((M - 2) * (M + 1) * (M + 3)))
    return {
        "mean": mean,
        "mean_se": float(np.sqrt(var / M)),
        "variance": var,
        "variance_se": float(np.sqrt(max(m4 - var * var * (M - 3) / (M - 1), 0.0) / M)),
        "skewness": float(stats.skew(x, bias=False)),
        "skewness_se": float(skew_se),
        "excess_kurtosis": float(stats.kurtosis(x, bias=False)),
        "kurtosis_se": float(2 * skew_se * np.sqrt((M * M - 1) / ((M - 3) * (M + 5)))),
    }


def run_experiment(cfg: ExperimentConfig, prediction: TheoryPrediction | None = None) -> ExperimentResult:
    """Draw ``M`` samples, compute centered linear statistics and compare with theory.

    Parameters
    ----------
    cfg : ExperimentConfig
    prediction : TheoryPrediction, optional
        Reuse an earlier theory evaluation for the same configuration.
    """
    S = cfg.build_profile()
    spec = cfg.ensemble(S)
    tf = cfg.test_function
    k4 = fourth_cumulant_sum(spec)
    if prediction is None:
        prediction = predict(tf, S, cfg.beta, k4, cfg.contour())
    V = prediction.variance
    if not V > 0:
        raise ValueError(f"configuration rejected: theoretical variance {V!r} is not positive")
    if V < 1e-3:
        warnings.warn(f"theoretical variance {V:.3g} is very small", RuntimeWarning)
    sc = sc_expectation(tf, cfg.N)

    def stat(i):
        try:
            lam = eigenvalues(sample(spec, i))
        except NumericError:
            return np.nan
        return float(np.sum(tf.f(lam)))

    raw = np.asarray(ordered_map(stat, range(cfg.M), cfg.threads))
    ok = np.isfinite(raw)
    n_failed = int(np.count_nonzero(~ok))
    if ok.sum() < 0.99 * cfg.M:
        raise NumericError(f"{n_failed} of {cfg.M} samples failed; at least 99% must succeed")
    centered = raw - sc
    x = centered[ok]
    mom = _moments(x)
    D, p = ks_normality((x - mom["mean"]) / np.sqrt(V))
    table = char_function_check(x - mom["mean"], V, cfg.lambdas)
    return ExperimentResult(
        config=cfg, raw=raw, centered=centered, sc_expectation=sc, n_failed=n_failed,
        k4=k4, prediction=prediction, ks_D=D, ks_p=p, char_table=table, **mom,
    )


def convergence_sweep(base_cfg: ExperimentConfig, N_list) -> list:
    """Run ``base_cfg`` at each ``N`` and tabulate variance ratio, KS p-value and bias."""
    rows = []
    for N in N_list:
        res = run_experiment(replace(base_cfg, N=int(N)))
        rows.append({
            "N": int(N),
            "variance": res.variance,
            "theory_variance": res.theory_variance,
            "variance_ratio": res.variance_ratio,
            "ks_p": res.ks_p,
            "mean": res.mean,
            "theory_bias": res.theory_bias,
            "bias_zscore": res.bias_zscore,
        })
    return rows


def local_law_survey(
    N_list,
    samples: int = 20,
    seed: int = 0,
    beta: int = 1,
    dist: str = "gaussian",
    profile: Callable[[int], VarianceProfile] = build_flat,
    threads: int = 1,
    base: float = 5.0,
    slack: float = 0.05,
) -> tuple:
    """Resolvent local laws over the default probe grid for several ``N``.

    Returns
    -------
    rows : list of dict
        One row per ``(N, sample, z, check)``.
    summary : dict
        Per-``N`` maxima, the median entrywise ratio at ``Im z = N**-0.5``
        and its growth factor between consecutive ``N``.
    """
    rows = []
    summary = {"per_N": [], "all_passed": True}
    prev_median = None
    for N in N_list:
        N = int(N)
        S = profile(N)
        spec = EnsembleSpec(beta, dist, S, seed)
        probes = probe_grid(N)
        rhos = [rho_of(S, z) for z in probes]
        vecs = default_test_vectors(N, seed)
        band = pass_band(N, base, slack)

        def one(i):
            H = sample(spec, i)
            out = []
            for z, r, G in zip(probes, rhos, resolvent_family(H, probes)):
                rep = check_resolvent_laws(H, S, z, vecs, G=G, band=band, rho=r)
                out.append(rep)
            return out

        reports = ordered_map(one, range(samples), threads)
        mid = []
        maxima = {}
        for i, reps in enumerate(reports):
            for rep in reps:
                for name, ratio in rep.ratios.items():
                    ok = ratio <= band
                    rows.append({"N": N, "seed": seed, "sample": i, "z": rep.z, "zp": None,
                                 "check": name, "ratio": ratio, "band": band, "pass": ok})
                    maxima[name] = max(maxima.get(name, 0.0), ratio)
                    summary["all_passed"] &= ok
                if abs(rep.z.imag - N ** -0.5) < 1e-12:
                    mid.append(rep.ratios["entrywise"])
        median = float(np.median(mid))
        growth = None if prev_median is None else median / prev_median
        prev_median = median
        summary["per_N"].append({"N": N, "band": band, "max_ratio": maxima,
                                 "median_entrywise": median, "growth": growth})
    return rows, summary
