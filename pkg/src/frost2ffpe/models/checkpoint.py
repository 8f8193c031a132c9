"""Versioned checkpoint files carrying weights, architecture, and RNG state."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import torch

from ..errors import ConfigurationError
from .discriminator import PatchDiscriminator
from .generator import GeneratorConfig, ResnetGenerator
from .projection import FeatureProjector

CHECKPOINT_SCHEMA = "frost2ffpe-checkpoint-v1"


@dataclass
class CheckpointBundle:
    """Everything needed to rebuild the networks and resume training."""

    generator_config: GeneratorConfig
    layer_ids: tuple[int, ...]
    embed_dim: int
    iteration: int
    generator_state: dict[str, torch.Tensor]
    discriminator_state: dict[str, torch.Tensor] | None = None
    projector_state: dict[str, torch.Tensor] | None = None
    g_optimizer_state: dict[str, Any] | None = None
    d_optimizer_state: dict[str, Any] | None = None
    sampler_state: torch.Tensor | None = None
    train_config: dict[str, Any] | None = None

    def build_generator(self) -> ResnetGenerator:
        gen = ResnetGenerator(self.generator_config)
        gen.load_state_dict(self.generator_state)
        gen.eval()
        return gen

    def build_discriminator(self) -> PatchDiscriminator:
        if self.discriminator_state is None:
            raise ConfigurationError("checkpoint has no discriminator weights")
        disc = PatchDiscriminator()
        disc.load_state_dict(self.discriminator_state)
        return disc

    def build_projector(self, generator: ResnetGenerator) -> FeatureProjector:
        if self.projector_state is None:
            raise ConfigurationError("checkpoint has no projection-head weights")
        proj = FeatureProjector.for_generator(generator, self.layer_ids, self.embed_dim)
        proj.load_state_dict(self.projector_state)
        return proj


def save_checkpoint(path: str | Path, bundle: CheckpointBundle) -> Path:
    path = Path(path)
    payload = {
        "schema": CHECKPOINT_SCHEMA,
        "generator_config": bundle.generator_config.to_dict(),
        "layer_ids": list(bundle.layer_ids),
        "embed_dim": bundle.embed_dim,
        "iteration": bundle.iteration,
        "generator_state": bundle.generator_state,
        "discriminator_state": bundle.discriminator_state,
        "projector_state": bundle.projector_state,
        "g_optimizer_state": bundle.g_optimizer_state,
        "d_optimizer_state": bundle.d_optimizer_state,
        "sampler_state": bundle.sampler_state,
        "train_config": bundle.train_config,
    }
    torch.save(payload, path)
    return path


def load_checkpoint(path: str | Path) -> CheckpointBundle:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    schema = payload.get("schema")
    if schema != CHECKPOINT_SCHEMA:
        raise ConfigurationError(f"unsupported checkpoint schema {schema!r}, expected {CHECKPOINT_SCHEMA!r}")
    return CheckpointBundle(
        generator_config=GeneratorConfig.from_dict(payload["generator_config"]),
        layer_ids=tuple(payload["layer_ids"]),
        embed_dim=int(payload["embed_dim"]),
        iteration=int(payload["iteration"]),
        generator_state=payload["generator_state"],
        discriminator_state=payload.get("discriminator_state"),
        projector_state=payload.get("projector_state"),
        g_optimizer_state=payload.get("g_optimizer_state"),
        d_optimizer_state=payload.get("d_optimizer_state"),
        sampler_state=payload.get("sampler_state"),
        train_config=payload.get("train_config"),
    )


__all__ = ["CHECKPOINT_SCHEMA", "CheckpointBundle", "load_checkpoint", "save_checkpoint"]
