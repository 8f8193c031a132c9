"""PatchGAN discriminator producing a spatial map of real/fake scores."""

from __future__ import annotations

import torch
from torch import nn

from ..errors import ConfigurationError, ValueSpaceError
from .generator import init_weights

_VALUE_TOL = 1e-5


class PatchDiscriminator(nn.Module):
    """Markovian discriminator: 4x4 convs, three stride-2 stages by default.

    A 512x512 input yields a 62x62 score map (70x70 receptive field).
    """

    def __init__(self, in_channels: int = 3, base_channels: int = 64, n_layers: int = 3) -> None:
        super().__init__()
        if n_layers < 1:
            raise ConfigurationError(f"n_layers must be >= 1, got {n_layers}")
        self.n_layers = n_layers

        layers: list[nn.Module] = [
            nn.Conv2d(in_channels, base_channels, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        mult = 1
        for i in range(1, n_layers):
            prev, mult = mult, min(2 ** i, 8)
            layers += [
                nn.Conv2d(base_channels * prev, base_channels * mult, 4, stride=2, padding=1),
                nn.InstanceNorm2d(base_channels * mult),
                nn.LeakyReLU(0.2, inplace=True),
            ]
        prev, mult = mult, min(2 ** n_layers, 8)
        layers += [
            nn.Conv2d(base_channels * prev, base_channels * mult, 4, stride=1, padding=1),
            nn.InstanceNorm2d(base_channels * mult),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(base_channels * mult, 1, 4, stride=1, padding=1),
        ]
        self.body = nn.Sequential(*layers)

    def score_map_size(self, side: int) -> int:
        """Spatial side of the score map for a square input of the given side."""
        s = side
        s = (s + 2 - 4) // 2 + 1
        for _ in range(1, self.n_layers):
            s = (s + 2 - 4) // 2 + 1
        s = (s + 2 - 4) + 1
        s = (s + 2 - 4) + 1
        return s

    @property
    def min_input_side(self) -> int:
        # the stride-1 tail applies instance norm, which needs > 1 spatial element
        return 4 * 2 ** self.n_layers

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4:
            raise ConfigurationError(f"expected N x C x H x W input, got shape {tuple(x.shape)}")
        if min(x.shape[2], x.shape[3]) < self.min_input_side:
            raise ConfigurationError(
                f"input spatial size {tuple(x.shape[2:])} below the discriminator minimum "
                f"{self.min_input_side}"
            )
        if not torch.is_floating_point(x):
            raise ValueSpaceError(f"expected normalized float input, got dtype {x.dtype}")
        lo, hi = float(x.detach().min()), float(x.detach().max())
        if lo < -1.0 - _VALUE_TOL or hi > 1.0 + _VALUE_TOL:
            raise ValueSpaceError(f"input outside the [-1, 1] value space (range [{lo:.4g}, {hi:.4g}])")
        return self.body(x)


def build_discriminator(
    in_channels: int = 3,
    base_channels: int = 64,
    n_layers: int = 3,
    seed: int | None = None,
) -> PatchDiscriminator:
    if seed is not None:
        torch.manual_seed(seed)
    disc = PatchDiscriminator(in_channels, base_channels, n_layers)
    init_weights(disc)
    return disc


__all__ = ["PatchDiscriminator", "build_discriminator"]
