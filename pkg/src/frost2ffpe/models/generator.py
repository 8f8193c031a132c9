"""ResNet generator with optional spatial attention blocks.

Layout: 7x7 stem, two stride-2 downsampling convs, `n_res_blocks` residual
blocks, two transposed-conv upsampling stages, 7x7 tanh head. Attention
blocks are appended inside the stage named by each `sab_positions` index.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ConfigurationError, ValueSpaceError
from .attention import SpatialAttention

_VALUE_TOL = 1e-5


@dataclass(frozen=True)
class GeneratorConfig:
    n_res_blocks: int = 9
    base_channels: int = 64
    norm: str = "instance"
    init: str = "xavier"
    sab_positions: tuple[int, ...] = (0,)
    output_activation: str = "tanh"
    sab_reduction: int = 8
    sab_pool_kernel: int = 2

    def __post_init__(self) -> None:
        if self.n_res_blocks < 1:
            raise ConfigurationError(f"n_res_blocks must be >= 1, got {self.n_res_blocks}")
        if self.base_channels < 1:
            raise ConfigurationError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.norm != "instance":
            raise ConfigurationError(f"unsupported norm {self.norm!r}")
        if self.init != "xavier":
            raise ConfigurationError(f"unsupported init {self.init!r}")
        if self.output_activation != "tanh":
            raise ConfigurationError(f"unsupported output activation {self.output_activation!r}")
        n_stages = self.n_res_blocks + 6  # stem, 2 down, res blocks, 2 up, head
        for pos in self.sab_positions:
            if not (0 <= pos < n_stages - 1):
                raise ConfigurationError(
                    f"sab position {pos} out of range [0, {n_stages - 2}] (no insertion after the head)"
                )
        object.__setattr__(self, "sab_positions", tuple(sorted(set(self.sab_positions))))

    def to_dict(self) -> dict:
        return {
            "n_res_blocks": self.n_res_blocks,
            "base_channels": self.base_channels,
            "norm": self.norm,
            "init": self.init,
            "sab_positions": list(self.sab_positions),
            "output_activation": self.output_activation,
            "sab_reduction": self.sab_reduction,
            "sab_pool_kernel": self.sab_pool_kernel,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorConfig":
        doc = dict(doc)
        doc["sab_positions"] = tuple(doc.get("sab_positions", ()))
        return cls(**doc)


class ResidualBlock(nn.Module):
    def __init__(self, dim: int) -> None:
        super().__init__()
        self.body = nn.Sequential(
            nn.ReflectionPad2d(1),
            nn.Conv2d(dim, dim, 3),
            nn.InstanceNorm2d(dim),
            nn.ReLU(inplace=True),
            nn.ReflectionPad2d(1),
            nn.Conv2d(dim, dim, 3),
            nn.InstanceNorm2d(dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.body(x)


class ResnetGenerator(nn.Module):
    """Image-to-image generator mapping [-1, 1] patches to [-1, 1] patches."""

    DOWNSAMPLE_FACTOR = 4  # two stride-2 stages

    def __init__(self, config: GeneratorConfig | None = None) -> None:
        super().__init__()
        self.config = config or GeneratorConfig()
        cfg = self.config
        base = cfg.base_channels

        stages: list[tuple[nn.Module, int]] = [
            (
                nn.Sequential(
                    nn.ReflectionPad2d(3),
                    nn.Conv2d(3, base, 7),
                    nn.InstanceNorm2d(base),
                    nn.ReLU(inplace=True),
                ),
                base,
            ),
            (
                nn.Sequential(
                    nn.Conv2d(base, base * 2, 3, stride=2, padding=1),
                    nn.InstanceNorm2d(base * 2),
                    nn.ReLU(inplace=True),
                ),
                base * 2,
            ),
            (
                nn.Sequential(
                    nn.Conv2d(base * 2, base * 4, 3, stride=2, padding=1),
                    nn.InstanceNorm2d(base * 4),
                    nn.ReLU(inplace=True),
                ),
                base * 4,
            ),
        ]
        stages += [(ResidualBlock(base * 4), base * 4) for _ in range(cfg.n_res_blocks)]
        stages += [
            (
                nn.Sequential(
                    nn.ConvTranspose2d(base * 4, base * 2, 3, stride=2, padding=1, output_padding=1),
                    nn.InstanceNorm2d(base * 2),
                    nn.ReLU(inplace=True),
                ),
                base * 2,
            ),
            (
                nn.Sequential(
                    nn.ConvTranspose2d(base * 2, base, 3, stride=2, padding=1, output_padding=1),
                    nn.InstanceNorm2d(base),
                    nn.ReLU(inplace=True),
                ),
                base,
            ),
            (
                nn.Sequential(
                    nn.ReflectionPad2d(3),
                    nn.Conv2d(base, 3, 7),
                    nn.Tanh(),
                ),
                3,
            ),
        ]

        blocks: list[nn.Module] = []
        self.stage_channels: list[int] = []
        for idx, (stage, out_ch) in enumerate(stages):
            if idx in cfg.sab_positions:
                stage = nn.Sequential(
                    stage,
                    SpatialAttention(out_ch, cfg.sab_reduction, cfg.sab_pool_kernel),
                )
            blocks.append(stage)
            self.stage_channels.append(out_ch)
        self.blocks = nn.ModuleList(blocks)

    # ---- feature taps -------------------------------------------------

    @property
    def n_stages(self) -> int:
        return len(self.blocks)

    def encoder_layer_ids(self) -> tuple[int, ...]:
        """Valid feature-tap ids: 0 is the input, i > 0 the output of stage i-1.

        Taps stop at the end of the residual stack (the encoder half).
        """
        return tuple(range(0, 3 + self.config.n_res_blocks + 1))

    def default_feature_layers(self) -> tuple[int, ...]:
        """Input, stem, both downsampling stages, and the mid residual block."""
        mid_res = 3 + (self.config.n_res_blocks + 1) // 2
        return (0, 1, 2, 3, mid_res)

    def layer_channels(self, layer_id: int) -> int:
        if layer_id == 0:
            return 3
        return self.stage_channels[layer_id - 1]

    def encode(self, x: torch.Tensor, layer_ids: tuple[int, ...] | list[int]) -> list[torch.Tensor]:
        """Run the forward pass collecting activations at the requested taps."""
        valid = self.encoder_layer_ids()
        bad = [i for i in layer_ids if i not in valid]
        if bad:
            raise ConfigurationError(f"invalid layer ids {bad}; valid encoder layer ids: {list(valid)}")
        self._check_input(x)
        wanted = set(layer_ids)
        features: dict[int, torch.Tensor] = {}
        if 0 in wanted:
            features[0] = x
        h = x
        last = max(layer_ids)
        for idx, block in enumerate(self.blocks, start=1):
            if idx > last:
                break
            h = block(h)
            if idx in wanted:
                features[idx] = h
        return [features[i] for i in layer_ids]

    # ---- forward -------------------------------------------------------

    def _check_input(self, x: torch.Tensor) -> None:
        if x.ndim != 4 or x.shape[1] != 3:
            raise ConfigurationError(f"expected N x 3 x H x W input, got shape {tuple(x.shape)}")
        if not torch.is_floating_point(x):
            raise ValueSpaceError(f"expected normalized float input, got dtype {x.dtype}")
        n, _, h, w = x.shape
        if h != w:
            raise ConfigurationError(f"input must be square, got {(h, w)}")
        if h % self.DOWNSAMPLE_FACTOR != 0:
            raise ConfigurationError(
                f"input side {h} must be a multiple of {self.DOWNSAMPLE_FACTOR}"
            )
        lo, hi = float(x.detach().min()), float(x.detach().max())
        if lo < -1.0 - _VALUE_TOL or hi > 1.0 + _VALUE_TOL:
            raise ValueSpaceError(
                f"input outside the [-1, 1] value space (range [{lo:.4g}, {hi:.4g}]); "
                "normalize uint8 pixels with uint8_to_normalized first"
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        self._check_input(x)
        h = x
        for block in self.blocks:
            h = block(h)
        return h


def init_weights(module: nn.Module, gain: float = 0.02) -> None:
    """Xavier-normal initialization for conv and linear weights, zero biases."""

    def _init(m: nn.Module) -> None:
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            nn.init.xavier_normal_(m.weight, gain=gain)
            if m.bias is not None:
                nn.init.zeros_(m.bias)

    module.apply(_init)


def build_generator(config: GeneratorConfig | None = None, seed: int | None = None) -> ResnetGenerator:
    if seed is not None:
        torch.manual_seed(seed)
    gen = ResnetGenerator(config)
    init_weights(gen)
    return gen


__all__ = ["GeneratorConfig", "ResidualBlock", "ResnetGenerator", "build_generator", "init_weights"]
