"""Two-layer MLP heads projecting generator activations to unit-sphere embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import ConfigurationError
from .generator import ResnetGenerator, init_weights

EMBED_DIM = 256


@dataclass
class FeatureStack:
    """Per-layer unit-norm embeddings at sampled spatial locations."""

    layer_ids: tuple[int, ...]
    embeddings: list[torch.Tensor]  # one (n_locations, dim) tensor per layer
    locations: list[torch.Tensor]   # flat spatial indices used per layer

    def __post_init__(self) -> None:
        if len(self.embeddings) != len(self.layer_ids) or len(self.locations) != len(self.layer_ids):
            raise ConfigurationError("layer_ids, embeddings, and locations must align")

    def detach(self) -> "FeatureStack":
        return FeatureStack(
            layer_ids=self.layer_ids,
            embeddings=[e.detach() for e in self.embeddings],
            locations=[loc for loc in self.locations],
        )

    def check_unit_norm(self, tol: float = 1e-5) -> None:
        for layer, emb in zip(self.layer_ids, self.embeddings):
            norms = emb.norm(dim=-1)
            err = float((norms.detach() - 1.0).abs().max()) if norms.numel() else 0.0
            if err > tol:
                raise ConfigurationError(
                    f"layer {layer} embeddings deviate from unit norm by {err:.3g}"
                )


class FeatureProjector(nn.Module):
    """One two-layer MLP per tapped generator layer, output L2-normalized."""

    def __init__(self, layer_ids: tuple[int, ...], layer_channels: dict[int, int], embed_dim: int = EMBED_DIM) -> None:
        super().__init__()
        self.layer_ids = tuple(layer_ids)
        self.embed_dim = embed_dim
        self.heads = nn.ModuleDict()
        for layer in self.layer_ids:
            c = layer_channels[layer]
            self.heads[str(layer)] = nn.Sequential(
                nn.Linear(c, embed_dim),
                nn.ReLU(inplace=True),
                nn.Linear(embed_dim, embed_dim),
            )

    @classmethod
    def for_generator(
        cls,
        generator: ResnetGenerator,
        layer_ids: tuple[int, ...] | None = None,
        embed_dim: int = EMBED_DIM,
        seed: int | None = None,
    ) -> "FeatureProjector":
        layer_ids = tuple(layer_ids) if layer_ids is not None else generator.default_feature_layers()
        channels = {layer: generator.layer_channels(layer) for layer in layer_ids}
        if seed is not None:
            torch.manual_seed(seed)
        proj = cls(layer_ids, channels, embed_dim)
        init_weights(proj)
        return proj

    def forward(self, features: list[torch.Tensor], locations: list[torch.Tensor]) -> FeatureStack:
        """Gather vectors at flat spatial indices and project each layer.

        Features are N x C x H x W with N == 1; locations index into the
        flattened H*W plane.
        """
        if len(features) != len(self.layer_ids) or len(locations) != len(self.layer_ids):
            raise ConfigurationError(
                f"expected {len(self.layer_ids)} feature maps and location sets, "
                f"got {len(features)} and {len(locations)}"
            )
        embeddings = []
        for layer, feat, idx in zip(self.layer_ids, features, locations):
            if feat.ndim != 4 or feat.shape[0] != 1:
                raise ConfigurationError(
                    f"layer {layer}: expected 1 x C x H x W features, got {tuple(feat.shape)}"
                )
            n_loc = feat.shape[2] * feat.shape[3]
            if idx.numel() and (int(idx.max()) >= n_loc or int(idx.min()) < 0):
                raise ConfigurationError(
                    f"layer {layer}: location index out of range [0, {n_loc})"
                )
            vectors = feat.flatten(2).squeeze(0).transpose(0, 1)[idx]  # (n, C)
            projected = self.heads[str(layer)](vectors)
            embeddings.append(F.normalize(projected, p=2, dim=-1))
        return FeatureStack(layer_ids=self.layer_ids, embeddings=embeddings, locations=list(locations))


def project_features(
    patch: torch.Tensor,
    layer_ids: tuple[int, ...],
    generator: ResnetGenerator,
    projector: FeatureProjector,
    locations: list[torch.Tensor] | None = None,
) -> FeatureStack:
    """Encode a normalized patch and project the tapped activations.

    When `locations` is omitted every spatial location is used, in raster
    order.
    """
    features = generator.encode(patch, layer_ids)
    if locations is None:
        locations = [torch.arange(f.shape[2] * f.shape[3], dtype=torch.long) for f in features]
    return projector(features, locations)


__all__ = ["EMBED_DIM", "FeatureProjector", "FeatureStack", "project_features"]
