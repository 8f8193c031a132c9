"""Spatial attention block: a non-local reweighting of generator activations.

Query path is full resolution; key and value paths are max-pooled. The
relation map is ReLU-activated, softmax-normalized per query location, and
the blended values are projected back and added residually to the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ConfigurationError


@dataclass
class AttentionTensors:
    """Intermediates of one attention pass, detached, for inspection/tests."""

    x: torch.Tensor       # input, N x C x H x W
    relation: torch.Tensor  # pre-softmax relation map, N x HW x (HW / pool^2)
    attention: torch.Tensor  # softmax rows, each summing to 1
    blended: torch.Tensor  # attention-weighted values, N x C x H x W
    out: torch.Tensor     # blended + x


class SpatialAttention(nn.Module):
    """Non-local block with max-pooled key/value paths and residual output.

    All four 1x1 convolutions are bias-free, so a zero input maps to a zero
    attention contribution and zeroed weights make the block an exact
    identity.
    """

    def __init__(self, channels: int, reduction: int = 8, pool_kernel: int = 2) -> None:
        super().__init__()
        if channels < 1:
            raise ConfigurationError(f"channels must be >= 1, got {channels}")
        if pool_kernel < 1:
            raise ConfigurationError(f"pool_kernel must be >= 1, got {pool_kernel}")
        inner = max(channels // reduction, 1)
        self.channels = channels
        self.inner = inner
        self.pool_kernel = pool_kernel
        self.query_conv = nn.Conv2d(channels, inner, 1, bias=False)
        self.key_conv = nn.Conv2d(channels, inner, 1, bias=False)
        self.value_conv = nn.Conv2d(channels, inner, 1, bias=False)
        self.out_conv = nn.Conv2d(inner, channels, 1, bias=False)
        self.pool = nn.MaxPool2d(pool_kernel)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out, _ = self._attend(x, keep_tensors=False)
        return out

    def forward_with_tensors(self, x: torch.Tensor) -> tuple[torch.Tensor, AttentionTensors]:
        return self._attend(x, keep_tensors=True)

    def _attend(self, x: torch.Tensor, keep_tensors: bool) -> tuple[torch.Tensor, AttentionTensors | None]:
        if x.ndim != 4:
            raise ConfigurationError(f"expected N x C x H x W input, got shape {tuple(x.shape)}")
        n, c, h, w = x.shape
        if c != self.channels:
            raise ConfigurationError(f"block built for {self.channels} channels, got {c}")
        if h < self.pool_kernel or w < self.pool_kernel:
            raise ConfigurationError(
                f"spatial dims {(h, w)} smaller than pooling kernel {self.pool_kernel}"
            )

        queries = self.query_conv(x).flatten(2).transpose(1, 2)        # N x HW x inner
        keys = self.pool(self.key_conv(x)).flatten(2)                  # N x inner x HW/p^2
        relation = torch.relu(torch.bmm(queries, keys))                # N x HW x HW/p^2
        attention = torch.softmax(relation, dim=-1)
        values = self.pool(self.value_conv(x)).flatten(2).transpose(1, 2)
        mixed = torch.bmm(attention, values)                           # N x HW x inner
        mixed = mixed.transpose(1, 2).reshape(n, self.inner, h, w)
        blended = self.out_conv(mixed)
        out = blended + x

        tensors = None
        if keep_tensors:
            tensors = AttentionTensors(
                x=x.detach(),
                relation=relation.detach(),
                attention=attention.detach(),
                blended=blended.detach(),
                out=out.detach(),
            )
        return out, tensors


__all__ = ["AttentionTensors", "SpatialAttention"]
