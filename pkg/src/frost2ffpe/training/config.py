"""Run configuration for training."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigurationError
from ..losses import LossWeights
from ..models.generator import GeneratorConfig


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.002
    beta1: float = 0.5
    beta2: float = 0.999
    epochs: int = 5
    batch_size: int = 1
    patches_per_image_queue: int = 512  # feature locations sampled per image per iteration
    seed: int = 0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    layer_ids: tuple[int, ...] | None = None  # None -> generator defaults
    checkpoint_every: int = 0  # 0 -> final checkpoint only
    gan_mode: str = "lsgan"  # "lsgan" | "logistic" | "none"
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    embed_dim: int = 256

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError(f"betas must be in [0, 1), got {self.beta1}, {self.beta2}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.batch_size != 1:
            raise ConfigurationError("only batch_size 1 is supported")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.patches_per_image_queue < 2:
            raise ConfigurationError("patches_per_image_queue must be >= 2")
        if self.checkpoint_every < 0:
            raise ConfigurationError("checkpoint_every must be >= 0")
        if self.gan_mode not in ("lsgan", "logistic", "none"):
            raise ConfigurationError(f"unknown gan_mode {self.gan_mode!r}")
        if self.layer_ids is not None:
            object.__setattr__(self, "layer_ids", tuple(self.layer_ids))

    def to_dict(self) -> dict:
        return {
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "patches_per_image_queue": self.patches_per_image_queue,
            "seed": self.seed,
            "loss_weights": self.loss_weights.to_dict(),
            "layer_ids": list(self.layer_ids) if self.layer_ids is not None else None,
            "checkpoint_every": self.checkpoint_every,
            "gan_mode": self.gan_mode,
            "generator": self.generator.to_dict(),
            "embed_dim": self.embed_dim,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        doc = dict(doc)
        if "loss_weights" in doc and isinstance(doc["loss_weights"], dict):
            doc["loss_weights"] = LossWeights.from_dict(doc["loss_weights"])
        if "generator" in doc and isinstance(doc["generator"], dict):
            doc["generator"] = GeneratorConfig.from_dict(doc["generator"])
        if doc.get("layer_ids") is not None:
            doc["layer_ids"] = tuple(doc["layer_ids"])
        return cls(**doc)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


__all__ = ["TrainConfig"]
