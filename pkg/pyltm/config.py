# -*- coding: utf-8 -*-
"""Experiment configuration: nested dataclasses read from INI-style files.

A configuration file has one section per dataclass below and flat
``key = value`` lines. Every field has a default, so an empty file is a
valid desk-scale experiment. Lists are comma separated.

Example
-------
::

    [dimensions]
    n_bits = 32
    hidden = 16
    window = 7

    [training]
    replay_ratio = 0.3
"""
# License: BSD 2 clause

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple


@dataclass
class DimensionConfig(object):
    """Frame, autoencoder and window sizes."""

    n_bits: int = 32
    n_actions: int = 0
    hidden: int = 16
    thought_width: int = 16
    window: int = 7
    allowed_lengths: Tuple[int, ...] = (7,)

    @property
    def width(self) -> int:
        return self.n_bits + self.n_actions


@dataclass
class StretcherConfig(object):
    density: float = 0.01
    seed: Optional[int] = None


@dataclass
class GrowthPolicy(object):
    """When and how a bank adds program vectors.

    Attributes
    ----------
    online : bool
        Grow on the buffer at every consolidation.
    init_sigma : float
        Standard deviation of the noise added to the parent embedding.
    cost_per_program : float
        Description cost of one more program, in nats (default 64 ln 2).
    plateau_eps, plateau_steps : float, int
        Training has plateaued when the mean min-loss improved by less than
        `plateau_eps` over the last `plateau_steps` steps.
    max_plateau_steps : int
        Upper bound on steps spent reaching a plateau.
    trial_steps : int
        Training steps given to a candidate before it is judged.
    max_programs : int
    """

    online: bool = False
    init_sigma: float = 0.1
    cost_per_program: float = 64 * math.log(2.0)
    plateau_eps: float = 1e-3
    plateau_steps: int = 200
    max_plateau_steps: int = 2000
    trial_steps: int = 200
    max_programs: int = 16


@dataclass
class BankConfig(object):
    n_programs: int = 3


@dataclass
class TrainingConfig(object):
    batch_size: int = 32
    steps: int = 100
    learning_rate: float = 0.01
    clip_norm: float = 5.0
    replay_ratio: float = 0.3
    objective: str = "reconstruction"
    span_cost: float = 1.0


@dataclass
class MemoryConfig(object):
    buffer_capacity: int = 4096
    max_degree: int = 16
    ef_construction: int = 100
    ef_search: int = 64
    compaction: float = 0.25


@dataclass
class KeyClassifierConfig(object):
    hidden: int = 32
    learning_rate: float = 0.01
    key_learning_rate: float = 0.01
    epochs: int = 20
    stable_delta: float = 1e-4


@dataclass
class DataConfig(object):
    """Synthetic stream written by `pyltm gen`."""

    domains: str = "counter,shift_register,periodic"
    episode_length: int = 700
    repeats: int = 3

    @property
    def domain_names(self) -> Tuple[str, ...]:
        return tuple(name.strip() for name in self.domains.split(",") if name.strip())


@dataclass
class PathConfig(object):
    trace: Optional[str] = None
    model_out: str = "model.ltmm"
    metrics_out: str = "metrics.csv"


@dataclass
class ExperimentConfig(object):
    """Everything one run of the command line needs."""

    dimensions: DimensionConfig = field(default_factory=DimensionConfig)
    stretcher: StretcherConfig = field(default_factory=StretcherConfig)
    bank: BankConfig = field(default_factory=BankConfig)
    growth: GrowthPolicy = field(default_factory=GrowthPolicy)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    keyclass: KeyClassifierConfig = field(default_factory=KeyClassifierConfig)
    data: DataConfig = field(default_factory=DataConfig)
    paths: PathConfig = field(default_factory=PathConfig)
    seed: int = 0

    @property
    def stretcher_seed(self) -> int:
        return self.seed if self.stretcher.seed is None else self.stretcher.seed

    @property
    def param_count(self) -> int:
        from pyltm.models.seqae import param_layout
        d = self.dimensions
        return param_layout(d.width, d.hidden, d.thought_width).size

    def validate(self) -> "ExperimentConfig":
        """Check that the fields are mutually consistent.

        Raises
        ------
        ValueError
            On the first inconsistency found.
        """
        d = self.dimensions
        if d.n_bits < 0 or d.n_actions < 0 or d.width < 1:
            raise ValueError(f"frame width must be positive (n_bits={d.n_bits}, n_actions={d.n_actions})")
        if d.hidden < 1 or d.thought_width < 1:
            raise ValueError("hidden size and thought width must be positive")
        if d.thought_width > 64:
            raise ValueError(f"thought_width {d.thought_width} does not fit 64-wide memory keys")
        if not d.allowed_lengths or min(d.allowed_lengths) < 1:
            raise ValueError(f"allowed_lengths must be positive, got {d.allowed_lengths}")
        if d.window not in d.allowed_lengths:
            raise ValueError(f"window {d.window} must be one of allowed_lengths {d.allowed_lengths}")
        if not 0.0 < self.stretcher.density <= 1.0:
            raise ValueError(f"stretcher density must lie in (0, 1], got {self.stretcher.density}")
        if self.bank.n_programs < 1:
            raise ValueError("a bank needs at least one program")
        if self.growth.max_programs < self.bank.n_programs:
            raise ValueError("growth.max_programs is below the initial number of programs")
        t = self.training
        if not 0.0 <= t.replay_ratio <= 1.0:
            raise ValueError(f"replay_ratio must lie in [0, 1], got {t.replay_ratio}")
        if t.objective not in ("reconstruction", "prediction"):
            raise ValueError(f"objective must be 'reconstruction' or 'prediction', got {t.objective!r}")
        if t.batch_size < 1 or t.steps < 0:
            raise ValueError("batch_size must be positive and steps non-negative")
        if self.memory.buffer_capacity < max(d.allowed_lengths):
            raise ValueError("buffer_capacity is smaller than the longest window")
        if self.data.episode_length < 1 or self.data.repeats < 1 or not self.data.domain_names:
            raise ValueError("the data section needs domains, a positive episode_length and repeats")
        return self


_SECTIONS = ("dimensions", "stretcher", "bank", "growth", "training", "memory", "keyclass", "data", "paths")


def _parse(raw: str, default: Any, name: str) -> Any:
    raw = raw.strip()
    if isinstance(default, bool):
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(default, tuple):
        return tuple(int(part) for part in raw.split(",") if part.strip())
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if raw.lower() in ("", "none"):
        return None
    if name.endswith("seed"):
        return int(raw)
    return raw


def _format(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    if value is None:
        return "none"
    return str(value).lower() if isinstance(value, bool) else str(value)


def apply_overrides(config: ExperimentConfig, values: Dict[str, Dict[str, str]]) -> ExperimentConfig:
    """Set fields from raw strings: ``{"training": {"steps": "10"}}``.

    Raises
    ------
    ValueError
        On unknown sections or keys and on unparsable values.
    """
    for section, entries in values.items():
        if section == "experiment":
            for key, raw in entries.items():
                if key != "seed":
                    raise ValueError(f"unknown key [experiment] {key}")
                config.seed = int(raw)
            continue
        if section not in _SECTIONS:
            raise ValueError(f"unknown configuration section [{section}]")
        target = getattr(config, section)
        known = {f.name: f for f in dataclasses.fields(target)}
        for key, raw in entries.items():
            if key not in known:
                raise ValueError(f"unknown key [{section}] {key}")
            setattr(target, key, _parse(raw, getattr(target, key), f"{section}.{key}"))
    return config


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Dict[str, str]]] = None) -> ExperimentConfig:
    """Read a configuration file (or the defaults when `path` is None)."""
    config = ExperimentConfig()
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        with open(path, "r", encoding="utf-8") as file:
            parser.read_file(file)
        apply_overrides(config, {section: dict(parser.items(section)) for section in parser.sections()})
    if overrides:
        apply_overrides(config, overrides)
    return config.validate()


def dump_config(config: ExperimentConfig) -> str:
    """The configuration as INI text that :func:`load_config` reads back."""
    lines = ["[experiment]", f"seed = {config.seed}", ""]
    for section in _SECTIONS:
        lines.append(f"[{section}]")
        target = getattr(config, section)
        for f in dataclasses.fields(target):
            lines.append(f"{f.name} = {_format(getattr(target, f.name))}")
        lines.append("")
    return "\n".join(lines)
