"""Command-line entry point ``wigner-clt``.

Usage: ``wigner-clt <command> --config <path> [--seed S] [--out DIR]``.

Exit status: 0 success, 1 validation failure (bad config, violated scale
hypothesis, failed checks), 2 numerical failure, 64 usage error, 74 I/O
error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    build_profile,
    build_test_function,
    config_hash,
    load_config,
    resolve_threads,
)
from .ensemble import EnsembleSpec, fourth_cumulant_sum
from .exceptions import HypothesisViolation, NumericError
from .harness import ExperimentConfig, convergence_sweep, local_law_survey, run_experiment
from .profile import save_profile, spectral_data, validate
from .reporting import emit_report, write_csv, write_json
from .theory import ContourSpec, bulk_limit, edge_limit, predict

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_USAGE, EXIT_IO = 0, 1, 2, 64, 74

COMMANDS = {
    "validate-profile": "check symmetry, row sums and flatness of the variance profile",
    "theory": "evaluate the variance V(f) and bias B(f) predictions",
    "mc": "run the Monte Carlo CLT experiment",
    "locallaw": "check the resolvent local laws on the probe grid",
    "sweep": "Monte Carlo variance ratio and KS p-value across several N",
    "meso-limits": "bulk and edge mesoscopic limits of the test function",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=80)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="wigner-clt",
        description="Numerical verification of CLTs for linear eigenvalue statistics of generalized Wigner matrices.",
        epilog="Environment: WIGNER_CLT_THREADS overrides the worker count from the config.",
        formatter_class=_formatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<command>", title="commands", parser_class=_Parser)
    for name, text in COMMANDS.items():
        p = sub.add_parser(name, help=text, description=text, formatter_class=_formatter)
        p.add_argument("--config", required=True, metavar="PATH", help="JSON configuration file")
        p.add_argument("--seed", type=int, default=None, metavar="S", help="override the seed in the config")
        p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: current directory)")
    return parser


def _meta(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg)}


def _contour(cfg, tf, N):
    opts = dict(cfg.get("theory", {}))
    return ContourSpec.for_function(tf, N, cfg.get("tau"), **opts)


def _ensemble(cfg, S):
    e = cfg.get("ensemble", {})
    return EnsembleSpec(e.get("beta", 1), e.get("dist", "gaussian"), S, cfg.get("seed", 0),
                        diag_dist=e.get("diag_dist"), p=e.get("p"))


def _cmd_validate_profile(cfg, out: Path) -> int:
    S = build_profile(cfg)
    rep = validate(S)
    record = {
        "n": rep.n,
        "max_row_deviation": rep.max_row_deviation,
        "asymmetry": rep.asymmetry,
        "c_inf": rep.c_inf,
        "c_sup": rep.c_sup,
        "symmetric": rep.symmetric,
        "normalized": rep.normalized,
        "flat": rep.flat,
        "passed": rep.passed,
    }
    if rep.passed:
        sd = spectral_data(S)
        record.update(gap_plus=sd.gap_plus, gap_minus=sd.gap_minus, top_eigenvalue=float(sd.eigenvalues[0]))
    write_json(out / "profile_report.json", record, _meta(cfg))
    if cfg.get("profile", {}).get("export"):
        save_profile(S, out / "profile.txt")
    if not rep.passed:
        print(f"profile invalid: deviation {rep.max_row_deviation:.3e}, asymmetry {rep.asymmetry:.3e}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _cmd_theory(cfg, out: Path) -> int:
    N = cfg["N"]
    tf = build_test_function(cfg)
    contour = _contour(cfg, tf, N)
    S = build_profile(cfg)
    spec = _ensemble(cfg, S)
    pred = predict(tf, S, spec.beta, fourth_cumulant_sum(spec), contour)
    write_json(out / "theory.json", pred.to_dict(), _meta(cfg))
    return EXIT_OK


def _experiment_config(cfg, N=None, M=None) -> ExperimentConfig:
    N = int(cfg["N"] if N is None else N)
    e = cfg.get("ensemble", {})
    mc = cfg.get("mc", {})
    kind = cfg.get("profile", {"type": "flat"})["type"]
    profile = None if kind == "flat" else (lambda n: build_profile(cfg, n))
    return ExperimentConfig(
        N=N,
        M=int(mc.get("M", 2000) if M is None else M),
        test_function=build_test_function(cfg, N),
        beta=e.get("beta", 1),
        dist=e.get("dist", "gaussian"),
        diag_dist=e.get("diag_dist"),
        p=e.get("p"),
        profile=profile,
        seed=cfg.get("seed", 0),
        tau=cfg.get("tau"),
        threads=resolve_threads(cfg),
        lambdas=tuple(mc.get("lambdas", (0.5, 1.0, 2.0))),
        contour_options=dict(cfg.get("theory", {})),
    )


def _cmd_mc(cfg, out: Path) -> int:
    res = run_experiment(_experiment_config(cfg))
    meta = _meta(cfg)
    for fmt in ("csv", "json", "gnuplot"):
        emit_report(res, fmt, out, meta, bins=cfg.get("mc", {}).get("bins", 40))
    return EXIT_OK


def _cmd_locallaw(cfg, out: Path) -> int:
    ll = cfg.get("locallaw", {})
    e = cfg.get("ensemble", {})
    rows, summary = local_law_survey(
        ll.get("N_list", [cfg["N"]]),
        samples=ll.get("samples", 20),
        seed=cfg.get("seed", 0),
        beta=e.get("beta", 1),
        dist=e.get("dist", "gaussian"),
        profile=lambda n: build_profile(cfg, n),
        threads=resolve_threads(cfg),
        base=ll.get("base", 5.0),
        slack=ll.get("slack", 0.05),
    )
    meta = _meta(cfg)
    header = ["N", "seed", "sample", "z", "zp", "check", "ratio", "band", "pass"]
    write_csv(out / "locallaw.csv", header, rows, meta)
    write_json(out / "locallaw_summary.json", summary, meta)
    return EXIT_OK if summary["all_passed"] else EXIT_VALIDATION


def _cmd_sweep(cfg, out: Path) -> int:
    sw = cfg.get("sweep", {})
    N_list = sw.get("N_list", [cfg["N"]])
    rows = convergence_sweep(_experiment_config(cfg, M=sw.get("M")), N_list) if N_list else []
    meta = _meta(cfg)
    header = ["N", "variance", "theory_variance", "variance_ratio", "ks_p", "mean", "theory_bias", "bias_zscore"]
    write_csv(out / "sweep.csv", header, rows, meta)
    write_json(out / "sweep.json", {"rows": rows}, meta)
    return EXIT_OK


def _cmd_meso_limits(cfg, out: Path) -> int:
    tf = build_test_function(cfg)
    beta = cfg.get("ensemble", {}).get("beta", 1)
    record = {"test_function": tf.name, "beta": beta, "bulk_variance": bulk_limit(tf, beta)}
    for side, key in ((2, "edge_plus"), (-2, "edge_minus")):
        mean, var = edge_limit(tf, beta, side)
        record[key] = {"mean": mean, "variance": var}
    write_json(out / "meso_limits.json", record, _meta(cfg))
    return EXIT_OK


_HANDLERS = {
    "validate-profile": _cmd_validate_profile,
    "theory": _cmd_theory,
    "mc": _cmd_mc,
    "locallaw": _cmd_locallaw,
    "sweep": _cmd_sweep,
    "meso-limits": _cmd_meso_limits,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            cfg["seed"] = args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[args.command](cfg, out)
    except HypothesisViolation as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
