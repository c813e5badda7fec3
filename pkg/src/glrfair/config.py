"""Experiment configuration: YAML (or JSON) files, validation and overrides."""
from __future__ import annotations

import copy
import os
import re
from dataclasses import asdict, dataclass, field

import yaml

from .data import Schema, Scaler
from .exceptions import ConfigError, GlrfairError
from .graph import KernelParams
from .metrics import PairSelection
from .model import VARIANTS, TrainConfig

__all__ = [
    "DataConfig",
    "ShiftConfig",
    "StatsConfig",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
    "apply_overrides",
]

KINDS = ("iid_cv", "covariate_shift")


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-7``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*(?:\.[0-9_]*)?(?:[eE][-+]?[0-9]+)?
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _yaml(text_or_stream):
    return yaml.load(text_or_stream, Loader=_Loader)  # noqa: S506 (safe loader subclass)


@dataclass(frozen=True)
class DataConfig:
    path: str
    schema: Schema
    scaling: str = "zscore"
    # (name, [[column, ...], ...]) pairs; columns are feature names
    sensitive: tuple = ()


@dataclass(frozen=True)
class ShiftConfig:
    column: str = "age"
    source_value: float = 0.0
    clip: float = 10.0


@dataclass(frozen=True)
class StatsConfig:
    confidence: float = 0.95
    level: float = 0.05
    tukey: str = "rejected"


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    data: DataConfig
    variants: tuple = VARIANTS
    train: TrainConfig = field(default_factory=TrainConfig)
    kernel: KernelParams = field(default_factory=KernelParams)
    pairs: PairSelection = field(default_factory=PairSelection)
    shift: ShiftConfig = field(default_factory=ShiftConfig)
    stats: StatsConfig = field(default_factory=StatsConfig)
    folds: int = 5
    seed: int = 0
    output_dir: str = "results"

    def to_dict(self):
        d = asdict(self)
        d["variants"] = list(self.variants)
        d["data"]["schema"]["categorical"] = list(self.data.schema.categorical)
        d["data"]["schema"]["drop"] = list(self.data.schema.drop)
        d["data"]["sensitive"] = [
            {"name": name, "columns": [list(g) for g in groups]}
            for name, groups in self.data.sensitive
        ]
        return d


def _section(d, key, cls):
    sub = d.get(key) or {}
    if not isinstance(sub, dict):
        raise ConfigError(f"section {key!r} must be a mapping")
    try:
        return cls(**sub)
    except TypeError as exc:
        raise ConfigError(f"section {key!r}: {exc}") from None
    except GlrfairError as exc:
        raise ConfigError(f"section {key!r}: {exc}") from None


def _sensitive(entries):
    out = []
    for e in entries or ():
        if not isinstance(e, dict) or "name" not in e or "columns" not in e:
            raise ConfigError(f"sensitive entry {e!r} needs 'name' and 'columns'")
        groups = [[g] if isinstance(g, str) else list(g) for g in e["columns"]]
        out.append((str(e["name"]), tuple(tuple(g) for g in groups)))
    return tuple(out)


def config_from_dict(d, base_dir="."):
    """Build and validate an :class:`ExperimentConfig` from a plain mapping.

    Relative data paths resolve against ``base_dir``; the stored path is
    absolute.
    """
    d = copy.deepcopy(d)
    known = {"kind", "data", "variants", "train", "kernel", "pairs", "shift", "stats",
             "folds", "seed", "output_dir"}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kind = d.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")

    data = d.get("data")
    if not isinstance(data, dict) or "path" not in data or "schema" not in data:
        raise ConfigError("data section needs 'path' and 'schema'")
    path = data["path"]
    if not os.path.isabs(path):
        path = os.path.normpath(os.path.join(base_dir, path))
    if not os.path.isfile(path):
        raise ConfigError(f"data file not found: {path}")
    try:
        schema = Schema.from_dict(data["schema"])
    except GlrfairError as exc:
        raise ConfigError(str(exc)) from None
    scaling = data.get("scaling", "zscore")
    if scaling not in Scaler.KINDS:
        raise ConfigError(f"scaling must be one of {Scaler.KINDS}, got {scaling!r}")
    data_cfg = DataConfig(path, schema, scaling, _sensitive(data.get("sensitive")))

    variants = tuple(d.get("variants", VARIANTS))
    if not variants:
        raise ConfigError("variant list is empty")
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; expected one of {VARIANTS}")
    if len(set(variants)) != len(variants):
        raise ConfigError("variant list has duplicates")

    seed = d.get("seed", 0)
    train = d.get("train") or {}
    train.setdefault("seed", seed)
    d["train"] = train
    stats_cfg = _section(d, "stats", StatsConfig)
    if stats_cfg.tukey not in ("rejected", "all"):
        raise ConfigError(f"stats.tukey must be 'rejected' or 'all', got {stats_cfg.tukey!r}")
    folds = d.get("folds", 5)
    if not isinstance(folds, int) or folds < 2:
        raise ConfigError(f"folds must be an integer >= 2, got {folds!r}")

    return ExperimentConfig(
        kind=kind,
        data=data_cfg,
        variants=variants,
        train=_section(d, "train", TrainConfig),
        kernel=_section(d, "kernel", KernelParams),
        pairs=_section(d, "pairs", PairSelection),
        shift=_section(d, "shift", ShiftConfig),
        stats=stats_cfg,
        folds=folds,
        seed=int(seed),
        output_dir=str(d.get("output_dir", "results")),
    )


def _read(path):
    try:
        with open(path) as fh:
            d = _yaml(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    return d


def apply_overrides(d, overrides):
    """Apply ``dotted.key=value`` overrides; values are parsed as YAML scalars."""
    d = copy.deepcopy(d)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        value = _yaml(raw) if raw.strip() else ""
        node = d
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-mapping")
        node[parts[-1]] = value
    return d


def load_config(path, overrides=()):
    """Read a YAML/JSON config (a run manifest also works) and validate it."""
    d = _read(path)
    if d.get("package") == "glrfair" and isinstance(d.get("config"), dict):
        d = d["config"]
    d = apply_overrides(d, overrides)
    return config_from_dict(d, base_dir=os.path.dirname(os.path.abspath(path)))
