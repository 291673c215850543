"""Pipeline configuration: one YAML file with a section per stage."""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    pass


# ``None`` marks an optional value of free type; mappings nest.
DEFAULTS: dict[str, Any] = {
    "seed": 1,
    "inputs": {
        "corpus": None,
        "h4n_words": None,
        "h4n_negative": None,
        "lm_master": None,
        "lm_lexicons": {},
        "market": None,
        "index": None,
        "factors": None,
        "fundamentals": None,
    },
    "corpus": {"min_tokens": 2000, "workers": 1},
    "embeddings": {
        "dim": 400,
        "window": 5,
        "min_count": 5,
        "epochs": 1,
        "initial_lr": 0.05,
        "subsample_threshold": 1e-3,
        "workers": 1,
    },
    "adapt": {
        "theta": 0.8,
        "k_folds": 5,
        "C": 1.0,
        "normalize": False,
        "target_proportion": None,
    },
    "regress": {
        "dependents": ["excess_return", "volatility"],
        "models": None,
        "text_scale": 100.0,
        "small_sample_correction": True,
    },
    "analyze": {"neighbor_probes": [], "neighbor_k": 10},
}

# sections whose keys are user-chosen names
_FREE_MAPPINGS = {("inputs", "lm_lexicons")}
_PATH_KEYS = {"corpus", "h4n_words", "h4n_negative", "lm_master", "market", "index", "factors", "fundamentals"}


def _merge(default: Any, value: Any, where: tuple[str, ...]) -> Any:
    if where in _FREE_MAPPINGS:
        if not isinstance(value, dict):
            raise ConfigError(f"{'.'.join(where)}: expected a mapping")
        return copy.deepcopy(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{'.'.join(where) or 'config'}: expected a mapping")
        unknown = sorted(set(value) - set(default))
        if unknown:
            raise ConfigError(f"unknown key(s) in {'.'.join(where) or 'config'}: {unknown}")
        out = copy.deepcopy(default)
        for key, v in value.items():
            out[key] = _merge(default[key], v, where + (key,))
        return out
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{'.'.join(where)}: expected true/false")
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{'.'.join(where)}: expected an integer")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{'.'.join(where)}: expected a number")
        value = float(value)
    elif isinstance(default, list) and not isinstance(value, list):
        raise ConfigError(f"{'.'.join(where)}: expected a list")
    return value


def load_config(path: str | Path | None) -> dict:
    """Defaults overlaid with the file; relative input paths resolve against the file's directory."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg = _merge(DEFAULTS, raw, ())
    base = path.resolve().parent
    inputs = cfg["inputs"]
    for key in _PATH_KEYS:
        if inputs[key] is not None:
            inputs[key] = str((base / inputs[key]).resolve())
    for name, spec in inputs["lm_lexicons"].items():
        if not isinstance(spec, dict) or set(spec) - {"path", "category"} or "path" not in spec:
            raise ConfigError(f"inputs.lm_lexicons.{name}: expected {{path, category}}")
        spec["path"] = str((base / spec["path"]).resolve())
        spec.setdefault("category", "negative")
    return cfg


def require_input(cfg: dict, key: str) -> Path:
    value = cfg["inputs"].get(key)
    if not value:
        raise ConfigError(f"inputs.{key} is not set")
    p = Path(value)
    if not p.exists():
        raise FileNotFoundError(f"inputs.{key}: {p} does not exist")
    return p


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True)
