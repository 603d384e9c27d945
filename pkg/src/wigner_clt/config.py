"""JSON run configuration: schema, hashing and construction of library objects.

Example document::

    {
      "N": 400,
      "seed": 7,
      "threads": 8,
      "profile": {"type": "flat"},
      "ensemble": {"beta": 1, "dist": "gaussian"},
      "test_function": {"name": "bump", "E0": 0.0, "eta0": 0.5},
      "mc": {"M": 2000, "lambdas": [0.5, 1.0, 2.0]},
      "locallaw": {"N_list": [250, 500], "samples": 20},
      "sweep": {"N_list": [200, 400, 800], "M": 500}
    }

``eta0`` may be replaced by ``eta0_exponent`` (``eta0 = N**-a``).  Profiles
are ``{"type": "flat"}``, ``{"type": "kernel", "kernel": "cosine",
"params": {...}}`` or ``{"type": "file", "path": "S.txt"}`` (plain-text
matrix format, relative paths resolved against the config file).
"""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import jsonschema

from .ensemble import DISTRIBUTIONS
from .profile import KERNELS, VarianceProfile, build_flat, build_from_kernel, load_profile
from .spectral import TEST_FUNCTIONS, TestFunction

__all__ = [
    "CONFIG_SCHEMA",
    "ConfigError",
    "load_config",
    "config_hash",
    "build_profile",
    "build_test_function",
    "resolve_threads",
]

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_N_LIST = {"type": "array", "items": {"type": "integer", "minimum": 2}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["N"],
    "properties": {
        "N": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "threads": _POS_INT,
        "tau": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "profile": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["flat", "kernel", "file"]},
                "kernel": {"enum": sorted(KERNELS)},
                "params": {"type": "object", "additionalProperties": _NUM},
                "sinkhorn_tol": {"type": "number", "exclusiveMinimum": 0},
                "path": {"type": "string"},
                "export": {"type": "boolean"},
            },
        },
        "ensemble": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta": {"enum": [1, 2]},
                "dist": {"enum": list(DISTRIBUTIONS)},
                "diag_dist": {"enum": list(DISTRIBUTIONS)},
                "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "test_function": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"enum": sorted(TEST_FUNCTIONS)},
                "E0": _NUM,
                "eta0": {"type": "number", "exclusiveMinimum": 0},
                "eta0_exponent": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "theory": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "height_limit": {"type": "boolean"},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "nodes_per_branch": _POS_INT,
            },
        },
        "mc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "M": {"type": "integer", "minimum": 100},
                "lambdas": {"type": "array", "items": _NUM},
                "bins": _POS_INT,
            },
        },
        "locallaw": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N_list": _N_LIST,
                "samples": _POS_INT,
                "base": {"type": "number", "exclusiveMinimum": 0},
                "slack": {"type": "number", "minimum": 0},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"N_list": _N_LIST, "M": {"type": "integer", "minimum": 100}},
        },
    },
}


class ConfigError(ValueError):
    """The configuration document is unreadable or violates the schema."""


def load_config(path) -> dict:
    """Read and validate a JSON configuration; records its directory under ``_dir``.

    Unreadable files raise ``OSError``; malformed or invalid documents raise
    :class:`ConfigError`.
    """
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {path} invalid at {where}: {exc.message}") from exc
    doc["_dir"] = str(path.parent.resolve())
    return doc


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, private keys dropped)."""
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    text = json.dumps(clean, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def build_profile(cfg: dict, N: int | None = None) -> VarianceProfile:
    """Variance profile described by ``cfg['profile']`` at dimension ``N``."""
    N = int(cfg["N"] if N is None else N)
    spec = cfg.get("profile", {"type": "flat"})
    kind = spec["type"]
    if kind == "flat":
        return build_flat(N)
    if kind == "kernel":
        name = spec.get("kernel")
        if name is None:
            raise ConfigError("kernel profile needs a 'kernel' name")
        kernel = KERNELS[name](**spec.get("params", {}))
        return build_from_kernel(N, kernel, sinkhorn_tol=spec.get("sinkhorn_tol", 1e-13))
    path = spec.get("path")
    if path is None:
        raise ConfigError("file profile needs a 'path'")
    p = Path(path)
    if not p.is_absolute():
        p = Path(cfg.get("_dir", ".")) / p
    S = load_profile(p)
    if S.n != N:
        raise ConfigError(f"profile file has n={S.n} but N={N}")
    return S


def build_test_function(cfg: dict, N: int | None = None) -> TestFunction:
    """Test function from ``cfg['test_function']``; defaults to the bump at 0 with scale 1."""
    N = int(cfg["N"] if N is None else N)
    spec = cfg.get("test_function", {})
    if "eta0" in spec and "eta0_exponent" in spec:
        raise ConfigError("give either eta0 or eta0_exponent, not both")
    eta0 = spec.get("eta0", 1.0)
    if "eta0_exponent" in spec:
        eta0 = N ** (-spec["eta0_exponent"])
    return TEST_FUNCTIONS[spec.get("name", "bump")](float(spec.get("E0", 0.0)), float(eta0))


def resolve_threads(cfg: dict) -> int:
    """Worker count: ``WIGNER_CLT_THREADS`` if set, else the config value, else 1."""
    env = os.environ.get("WIGNER_CLT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"WIGNER_CLT_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigError("WIGNER_CLT_THREADS must be positive")
        return n
    return int(cfg.get("threads", 1))
