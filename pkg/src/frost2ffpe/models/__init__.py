"""Generator, discriminator, and contrastive projection networks."""

from .attention import AttentionTensors, SpatialAttention
from .generator import GeneratorConfig, ResnetGenerator, build_generator
from .discriminator import PatchDiscriminator, build_discriminator
from .projection import FeatureProjector, FeatureStack, project_features
from .checkpoint import CHECKPOINT_SCHEMA, CheckpointBundle, load_checkpoint, save_checkpoint

__all__ = [
    "AttentionTensors",
    "CHECKPOINT_SCHEMA",
    "CheckpointBundle",
    "FeatureProjector",
    "FeatureStack",
    "GeneratorConfig",
    "PatchDiscriminator",
    "ResnetGenerator",
    "SpatialAttention",
    "build_discriminator",
    "build_generator",
    "load_checkpoint",
    "project_features",
    "save_checkpoint",
]
