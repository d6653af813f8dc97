"""Run configuration: one JSON file plus dotted --set overrides.

The resolved configuration is a plain nested dict so that reports can
echo it verbatim; typed sub-configs are materialized on demand.
"""

import copy
import json
from pathlib import Path

from .envelope import GpConfig
from .errors import ConfigError
from .ioutil import read_json
from .scoring import ScoringConfig
from .synth import (DEFAULT_DELTAS, DEFAULT_MODES, DEFAULT_WINDOW, SIGMA_GEN)
from .vae import VaeConfig

DEFAULTS = {
    "seed": None,   # mandatory; no default value
    "paths": {
        "corpus_dir": "corpus",
        "out_dir": "out",
    },
    "synth": {
        "sentences": 4,
        "natives": 6,
        "learners": 8,
        "deltas": list(DEFAULT_DELTAS),
        "modes": list(DEFAULT_MODES),
        "window": list(DEFAULT_WINDOW),
        "t_proto": 120,
        "channels": 6,
        "sigma": SIGMA_GEN,
    },
    "vae": {
        "hidden": [100, 50],
        "latent_dim": 10,
        "alpha": 0.9,
        "beta": 0.0001,
        "lr": 0.001,
        "batch_size": 32,
        "epochs": 2000,
        "noise_scale": 0.001,
        # the embedder sees only native productions; learners are encoded
        # with it but never train it
        "train_pool": "natives",
    },
    "gp": {
        "lr": 0.1,
        "tol": 0.001,
        "max_iters": 2000,
        "init_lengthscale": 0.2,
        "outputscale_frac": 1.0,
        "noise_frac": 0.05,
        "prior_concentration": 0.1,
        "prior_rate": 0.1,
    },
    "dtw": {"radius": 20},
    "scoring": {
        "pd_variance": "predictive",
        "band_variance": "predictive",
        "min_run": 3,
    },
    "plot": {"width": 720, "height": 360},
}


def _merge(defaults: dict, overrides: dict, prefix: str = "") -> dict:
    merged = copy.deepcopy(defaults)
    for key, value in overrides.items():
        dotted = f"{prefix}{key}"
        if key not in defaults:
            raise ConfigError(f"unknown config key {dotted!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {dotted!r} must be an object")
            merged[key] = _merge(defaults[key], value, prefix=f"{dotted}.")
        else:
            merged[key] = value
    return merged


def apply_overrides(cfg: dict, assignments) -> dict:
    """Apply `--set dotted.key=value` pairs; values parse as JSON when
    possible and fall back to plain strings."""
    cfg = copy.deepcopy(cfg)
    for raw in assignments:
        if "=" not in raw:
            raise ConfigError(f"--set expects key=value, got {raw!r}")
        dotted, text = raw.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = cfg
        parts = dotted.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config key {dotted!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node[parts[-1]] = value
    return cfg


def resolve_config(raw: dict, base_dir: str | Path = ".",
                   assignments=()) -> dict:
    """Merge user config over the defaults, apply --set overrides, check
    the seed, and normalize paths.

    Relative paths are taken relative to the config file's directory so
    that a config + corpus tree is relocatable.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    cfg = _merge(DEFAULTS, raw)
    if assignments:
        cfg = apply_overrides(cfg, assignments)
    seed = cfg.get("seed")
    if seed is None:
        raise ConfigError("config must set an integer 'seed'")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    base = Path(base_dir)
    for key, value in cfg["paths"].items():
        if not isinstance(value, str) or not value:
            raise ConfigError(f"paths.{key} must be a non-empty string")
        p = Path(value)
        cfg["paths"][key] = str(p if p.is_absolute() else base / p)
    return cfg


def load_config(path: str | Path, assignments=()) -> dict:
    path = Path(path)
    raw = read_json(path)
    return resolve_config(raw, base_dir=path.parent, assignments=assignments)


def vae_config(cfg: dict) -> VaeConfig:
    v = cfg["vae"]
    return VaeConfig(hidden=tuple(v["hidden"]), latent_dim=v["latent_dim"],
                     alpha=v["alpha"], beta=v["beta"], lr=v["lr"],
                     batch_size=v["batch_size"], epochs=v["epochs"],
                     noise_scale=v["noise_scale"], seed=cfg["seed"])


def gp_config(cfg: dict) -> GpConfig:
    g = cfg["gp"]
    return GpConfig(lr=g["lr"], tol=g["tol"], max_iters=g["max_iters"],
                    init_lengthscale=g["init_lengthscale"],
                    outputscale_frac=g["outputscale_frac"],
                    noise_frac=g["noise_frac"],
                    prior_concentration=g["prior_concentration"],
                    prior_rate=g["prior_rate"])


def scoring_config(cfg: dict) -> ScoringConfig:
    s = cfg["scoring"]
    return ScoringConfig(pd_variance=s["pd_variance"],
                         band_variance=s["band_variance"],
                         min_run=s["min_run"], radius=cfg["dtw"]["radius"])
