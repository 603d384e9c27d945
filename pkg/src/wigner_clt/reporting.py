"""Deterministic CSV, JSON and gnuplot writers.

Every file starts with (or, for JSON, contains) the library version and the
hash of the configuration that produced it.  Floats are written with
``repr`` so identical results give identical bytes.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__

__all__ = ["to_jsonable", "write_json", "write_csv", "write_gnuplot", "emit_report"]


def to_jsonable(obj):
    """Convert numpy scalars/arrays, complex numbers and tuples to JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _meta(meta: dict | None) -> dict:
    out = {"version": __version__}
    out.update(meta or {})
    return out


def write_json(path, record: dict, meta: dict | None = None) -> Path:
    path = Path(path)
    doc = dict(to_jsonable(record))
    doc.update(to_jsonable(_meta(meta)))
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (complex, np.complexfloating)):
        return f"{v.real!r}{v.imag:+.17g}j"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows, meta: dict | None = None) -> Path:
    """CSV with leading ``#`` comment lines for the metadata."""
    path = Path(path)
    lines = [f"# {k}={v}" for k, v in sorted(_meta(meta).items())]
    lines.append(",".join(header))
    for row in rows:
        vals = row if isinstance(row, (list, tuple)) else [row.get(h) for h in header]
        lines.append(",".join(_cell(v) for v in vals))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_gnuplot(path, x, y, meta: dict | None = None, title: str = "") -> Path:
    """Two numeric columns; all other lines are ``#`` comments."""
    path = Path(path)
    lines = [f"# {title}"] if title else []
    lines += [f"# {k}={v}" for k, v in sorted(_meta(meta).items())]
    lines += [f"{float(a)!r} {float(b)!r}" for a, b in zip(x, y)]
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_report(result, fmt: str, out_dir, meta: dict | None = None, bins: int = 40) -> list:
    """Write a Monte Carlo :class:`~wigner_clt.harness.ExperimentResult`.

    Parameters
    ----------
    fmt : {"csv", "json", "gnuplot"}
        ``csv``: per-sample statistics; ``json``: summary record;
        ``gnuplot``: histogram and normal Q-Q data of the standardized samples.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        rows = [(i, r, c) for i, (r, c) in enumerate(zip(result.raw, result.centered))]
        return [write_csv(out / "mc_samples.csv", ["index", "raw", "centered"], rows, meta)]
    if fmt == "json":
        return [write_json(out / "mc_summary.json", result.summary(), meta)]
    if fmt == "gnuplot":
        x = result.centered[np.isfinite(result.centered)]
        z = np.sort((x - result.mean) / np.sqrt(result.theory_variance))
        dens, edges = np.histogram(z, bins=bins, density=True)
        centers = (edges[:-1] + edges[1:]) / 2
        q = stats.norm.ppf((np.arange(1, z.size + 1) - 0.5) / z.size)
        return [
            write_gnuplot(out / "mc_hist.dat", centers, dens, meta, "bin_center density (standardized by theory variance)"),
            write_gnuplot(out / "mc_qq.dat", q, z, meta, "normal_quantile sample_quantile"),
        ]
    raise ValueError(f"unknown format {fmt!r}")
