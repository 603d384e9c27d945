"""Monte Carlo check of the CLT: empirical moments against V(f) and B(f).

Run: python demos/04_clt_monte_carlo.py   (a few minutes on one core)
Set WIGNER_CLT_THREADS to use more workers; results do not depend on it.
"""
import os

from wigner_clt.harness import ExperimentConfig, run_experiment
from wigner_clt.profile import KERNELS, build_from_kernel
from wigner_clt.spectral import bump

threads = int(os.environ.get("WIGNER_CLT_THREADS", "1"))
tf = bump(0.0, 0.5)

runs = {
    "flat GOE": ExperimentConfig(N=300, M=1000, test_function=tf, seed=1, threads=threads),
    "flat GUE": ExperimentConfig(N=300, M=1000, test_function=tf, beta=2, seed=1, threads=threads),
    "flat Rademacher": ExperimentConfig(N=300, M=1000, test_function=tf, dist="rademacher", seed=1,
                                        threads=threads),
    "cosine profile": ExperimentConfig(N=300, M=1000, test_function=tf, seed=1, threads=threads,
                                       profile=lambda n: build_from_kernel(n, KERNELS["cosine"]())),
}

for label, cfg in runs.items():
    r = run_experiment(cfg)
    print(f"{label}:")
    print(f"  variance {r.variance:.4f} +- {r.variance_se:.4f}   theory {r.theory_variance:.4f}   "
          f"ratio {r.variance_ratio:.3f}")
    print(f"  mean     {r.mean:+.4f} +- {r.mean_se:.4f}   theory {r.theory_bias:+.4f}   z {r.bias_zscore:+.2f}")
    print(f"  KS p {r.ks_p:.3f}   excess kurtosis {r.excess_kurtosis:+.3f} +- {r.kurtosis_se:.3f}")
    for row in r.char_table:
        print(f"  phi({row['lambda']}) = {row['re']:+.4f}{row['im']:+.4f}i   gaussian {row['gaussian']:.4f}")
