"""Run configuration: defaults, JSON loading, echo.

Every run is described by one TrainConfig. Loading merges the file over
the verb's defaults and rejects unknown keys, so typos fail loudly; the
echo written next to the artifacts materializes every default, which
together with the seed reproduces the run exactly.

batch_size semantics: unsupervised and baseline runs draw batch_size
samples per source (real and generated); conditional runs split
batch_size across all real-plus-generated classes, at least one sample
each.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

from .datasets import DatasetSpec
from .errors import FormatError

_ACTIVATION_NAMES = ("leaky_relu", "relu", "tanh", "identity")


@dataclass
class OptimizerConfig:
    alpha: float = 1e-3
    rho: float = 0.9
    stabilizer: float = 1e-8


@dataclass
class ScheduleConfig:
    mode: str = "dynamic"
    fixed_id: int = 1
    fixed_ig: int = 1
    lambda_floor: float = 1e-6


@dataclass
class TrainConfig:
    seed: int = 0
    iterations: int = 2000
    batch_size: int = 64
    eta: float = 0.9
    epsilon: float = 1e-4
    feature_dim: int = 4
    z_dim: int = 8
    real_classes: int = 1
    gen_classes: int = 1
    clip: float = 0.01
    checkpoint_every: int = 0
    generator_hidden: list = field(default_factory=lambda: [32, 32])
    extractor_hidden: list = field(default_factory=lambda: [32])
    generator_output: str = "identity"
    generator_gain: float = 1.0
    gen_optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    disc_optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    dataset: DatasetSpec = field(
        default_factory=lambda: DatasetSpec(
            kind="gaussian_mixture", means=[[2.0, -1.0]], covariances=[0.25], weights=[1.0]
        )
    )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["dataset"].pop("seed", None)  # run seed is the only seed
        return out


def _radius_three_mixture():
    means = []
    for k in range(3):
        angle = 2.0 * math.pi * k / 3.0
        means.append([3.0 * math.cos(angle), 3.0 * math.sin(angle)])
    return DatasetSpec(
        kind="gaussian_mixture",
        means=means,
        covariances=[0.2, 0.2, 0.2],
        weights=[1.0 / 3.0] * 3,
    )


def default_config(verb: str) -> TrainConfig:
    """Materialized defaults for a CLI verb."""
    if verb in ("train-unsup", "probe", "export-plots"):
        cfg = TrainConfig()
        cfg.gen_optimizer = OptimizerConfig(alpha=5e-3)
        cfg.disc_optimizer = OptimizerConfig(alpha=2e-3)
        return cfg
    if verb == "train-cond":
        return TrainConfig(
            iterations=3000,
            batch_size=60,
            eta=1.0,
            real_classes=3,
            gen_classes=3,
            feature_dim=8,
            gen_optimizer=OptimizerConfig(alpha=2e-3),
            disc_optimizer=OptimizerConfig(alpha=1e-2),
            schedule=ScheduleConfig(mode="fixed", fixed_id=2, fixed_ig=2),
            dataset=_radius_three_mixture(),
        )
    if verb == "train-wgan":
        return TrainConfig(
            iterations=500,
            gen_optimizer=OptimizerConfig(alpha=5e-5),
            disc_optimizer=OptimizerConfig(alpha=5e-5),
            extractor_hidden=[32, 32],
            schedule=ScheduleConfig(mode="fixed", fixed_id=5, fixed_ig=1),
        )
    raise FormatError(f"no defaults for verb {verb!r}")


def _merge(target, patch, trail: str):
    for key, value in patch.items():
        if key not in target:
            raise FormatError(f"unknown config key: {trail}{key}")
        if isinstance(target[key], dict):
            if not isinstance(value, dict):
                raise FormatError(f"config key {trail}{key} must be an object")
            _merge(target[key], value, f"{trail}{key}.")
        else:
            target[key] = value


def _build(data: dict) -> TrainConfig:
    kwargs = dict(data)
    kwargs["gen_optimizer"] = OptimizerConfig(**data["gen_optimizer"])
    kwargs["disc_optimizer"] = OptimizerConfig(**data["disc_optimizer"])
    kwargs["schedule"] = ScheduleConfig(**data["schedule"])
    kwargs["dataset"] = DatasetSpec(**data["dataset"])
    return TrainConfig(**kwargs)


def validate_config(cfg: TrainConfig) -> TrainConfig:
    """Raises FormatError on any out-of-contract value."""
    checks = [
        (cfg.iterations >= 0, "iterations must be >= 0"),
        (cfg.batch_size >= 2, "batch_size must be >= 2"),
        (0.0 < cfg.eta <= 1.0, "eta must be in (0, 1]"),
        (cfg.epsilon >= 0.0, "epsilon must be >= 0"),
        (cfg.feature_dim >= 1, "feature_dim must be >= 1"),
        (cfg.z_dim >= 1, "z_dim must be >= 1"),
        (cfg.real_classes >= 1 and cfg.gen_classes >= 1, "class counts must be >= 1"),
        (cfg.clip > 0.0, "clip must be > 0"),
        (cfg.checkpoint_every >= 0, "checkpoint_every must be >= 0"),
        (len(cfg.generator_hidden) >= 1, "generator_hidden must be nonempty"),
        (len(cfg.extractor_hidden) >= 1, "extractor_hidden must be nonempty"),
        (all(int(h) >= 1 for h in cfg.generator_hidden), "hidden sizes must be >= 1"),
        (all(int(h) >= 1 for h in cfg.extractor_hidden), "hidden sizes must be >= 1"),
        (cfg.generator_output in _ACTIVATION_NAMES, "unknown generator_output activation"),
        (cfg.generator_gain > 0.0, "generator_gain must be > 0"),
        (cfg.schedule.mode in ("dynamic", "fixed"), "schedule.mode must be dynamic or fixed"),
        (cfg.schedule.fixed_id >= 1 and cfg.schedule.fixed_ig >= 1, "fixed counts must be >= 1"),
        (cfg.schedule.lambda_floor > 0.0, "lambda_floor must be > 0"),
        (cfg.gen_optimizer.alpha > 0.0, "gen_optimizer.alpha must be > 0"),
        (cfg.disc_optimizer.alpha > 0.0, "disc_optimizer.alpha must be > 0"),
    ]
    for ok, message in checks:
        if not ok:
            raise FormatError(f"bad config: {message}")
    return cfg


def load_config(path: str, verb: str) -> TrainConfig:
    """Defaults for the verb patched by the JSON file at path.

    Raises
    ------
    FormatError
        Malformed JSON, unknown key, or invalid value.
    OSError
        Unreadable file (the CLI maps a missing path to a usage error).
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            patch = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(patch, dict):
        raise FormatError(f"{path}: config root must be an object")
    base = default_config(verb).to_dict()
    _merge(base, patch, "")
    return validate_config(_build(base))


def write_config_echo(cfg: TrainConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
