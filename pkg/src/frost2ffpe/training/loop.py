"""One-sided adversarial training: alternate D and G(+MLP) updates.

All stochasticity is owned by explicit generators: model init by the run
seed, per-epoch data order by (seed, epoch), and feature-location sampling
by a checkpointed torch.Generator, so any checkpoint resumes bit-exactly.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from ..errors import ConfigurationError
from ..losses import (
    LossReport,
    adversarial_losses,
    patch_nce_loss,
    self_regularization_loss,
    total_loss,
    weighted_total,
)
from ..models.checkpoint import CheckpointBundle, load_checkpoint, save_checkpoint
from ..models.discriminator import PatchDiscriminator
from ..models.generator import ResnetGenerator, init_weights
from ..models.projection import FeatureProjector
from ..wsi.patches import ImagePatch, load_patch, uint8_to_normalized
from .config import TrainConfig


def sample_locations(
    feature_shapes: Sequence[tuple[int, ...]],
    count: int,
    rng: torch.Generator,
) -> list[torch.Tensor]:
    """Uniform sample of flat spatial indices, without replacement, per layer."""
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    indices = []
    for shape in feature_shapes:
        n = int(shape[-1]) * int(shape[-2])
        if count > n:
            raise ConfigurationError(
                f"requested {count} locations but layer of shape {tuple(shape)} has only {n}"
            )
        indices.append(torch.randperm(n, generator=rng)[:count])
    return indices


def epoch_order(n: int, seed: int, epoch: int, stream: int) -> np.ndarray:
    """Deterministic per-epoch shuffle, recomputable for resume."""
    rng = np.random.default_rng([seed, epoch, stream])
    return rng.permutation(n)


def _to_input_tensor(item) -> torch.Tensor:
    """Coerce a dataset item (path, ImagePatch, array, tensor) to 1x3xHxW in [-1, 1]."""
    if isinstance(item, (str, Path)):
        item = load_patch(item)
    if isinstance(item, ImagePatch):
        arr = item.to_normalized().pixels
        tensor = torch.from_numpy(arr).permute(2, 0, 1)
    elif isinstance(item, np.ndarray):
        if item.dtype == np.uint8:
            item = uint8_to_normalized(item)
        tensor = torch.from_numpy(np.ascontiguousarray(item, dtype=np.float32))
        if tensor.ndim == 3 and tensor.shape[2] == 3:
            tensor = tensor.permute(2, 0, 1)
    elif isinstance(item, torch.Tensor):
        tensor = item.float()
        if tensor.ndim == 3 and tensor.shape[-1] == 3:
            tensor = tensor.permute(2, 0, 1)
    else:
        raise ConfigurationError(f"unsupported dataset item type {type(item).__name__}")
    if tensor.ndim == 3:
        tensor = tensor.unsqueeze(0)
    if tensor.ndim != 4 or tensor.shape[1] != 3:
        raise ConfigurationError(f"expected a 3-channel image, got shape {tuple(tensor.shape)}")
    return tensor


class Trainer:
    """Owns the networks, optimizers, and RNG streams of one training run."""

    def __init__(self, cfg: TrainConfig) -> None:
        self.cfg = cfg
        torch.manual_seed(cfg.seed)
        self.generator = ResnetGenerator(cfg.generator)
        init_weights(self.generator)
        self.discriminator = PatchDiscriminator()
        init_weights(self.discriminator)
        self.layer_ids = (
            tuple(cfg.layer_ids) if cfg.layer_ids is not None else self.generator.default_feature_layers()
        )
        self.projector = FeatureProjector.for_generator(
            self.generator, self.layer_ids, embed_dim=cfg.embed_dim
        )
        init_weights(self.projector)

        self.g_opt = torch.optim.Adam(
            list(self.generator.parameters()) + list(self.projector.parameters()),
            lr=cfg.lr,
            betas=(cfg.beta1, cfg.beta2),
        )
        self.d_opt = torch.optim.Adam(
            self.discriminator.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2)
        )
        self.sampler = torch.Generator()
        self.sampler.manual_seed(cfg.seed + 1)
        self.iteration = 0

    # ---- checkpointing --------------------------------------------------

    def to_bundle(self) -> CheckpointBundle:
        return CheckpointBundle(
            generator_config=self.cfg.generator,
            layer_ids=self.layer_ids,
            embed_dim=self.cfg.embed_dim,
            iteration=self.iteration,
            generator_state=self.generator.state_dict(),
            discriminator_state=self.discriminator.state_dict(),
            projector_state=self.projector.state_dict(),
            g_optimizer_state=self.g_opt.state_dict(),
            d_optimizer_state=self.d_opt.state_dict(),
            sampler_state=self.sampler.get_state(),
            train_config=self.cfg.to_dict(),
        )

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(path, self.to_bundle())

    @classmethod
    def from_checkpoint(cls, path: str | Path, cfg: TrainConfig | None = None) -> "Trainer":
        bundle = load_checkpoint(path)
        if cfg is None:
            if bundle.train_config is None:
                raise ConfigurationError("checkpoint carries no train config; pass one explicitly")
            cfg = TrainConfig.from_dict(bundle.train_config)
        trainer = cls(cfg)
        trainer.generator.load_state_dict(bundle.generator_state)
        if bundle.discriminator_state is not None:
            trainer.discriminator.load_state_dict(bundle.discriminator_state)
        if bundle.projector_state is not None:
            trainer.projector.load_state_dict(bundle.projector_state)
        if bundle.g_optimizer_state is not None:
            trainer.g_opt.load_state_dict(bundle.g_optimizer_state)
        if bundle.d_optimizer_state is not None:
            trainer.d_opt.load_state_dict(bundle.d_optimizer_state)
        if bundle.sampler_state is not None:
            trainer.sampler.set_state(bundle.sampler_state)
        trainer.iteration = bundle.iteration
        return trainer

    # ---- one iteration ---------------------------------------------------

    @staticmethod
    def _set_requires_grad(module: torch.nn.Module, flag: bool) -> None:
        for p in module.parameters():
            p.requires_grad_(flag)

    def _contrastive(self, source: torch.Tensor, generated: torch.Tensor, temperature: float) -> torch.Tensor:
        """PatchNCE between a source image and its translation.

        Keys are computed without gradients (they only anchor the queries);
        the identical location sample is applied to both stacks.
        """
        feats_query = self.generator.encode(generated, self.layer_ids)
        with torch.no_grad():
            feats_key = self.generator.encode(source, self.layer_ids)
        locations = []
        for f in feats_query:
            n = f.shape[2] * f.shape[3]
            cnt = min(self.cfg.patches_per_image_queue, n)
            locations.append(sample_locations([tuple(f.shape)], cnt, self.sampler)[0])
        queries = self.projector(feats_query, locations)
        with torch.no_grad():
            keys = self.projector(feats_key, locations)
        return patch_nce_loss(queries, keys.detach(), temperature)

    def train_step(self, frozen_patch, ffpe_patch) -> LossReport:
        """One D update, then one G(+MLP) update; losses reported pre-update."""
        cfg = self.cfg
        w = cfg.loss_weights
        x = _to_input_tensor(frozen_patch)
        y = _to_input_tensor(ffpe_patch)

        fake = self.generator(x)
        zero = torch.zeros(())

        if cfg.gan_mode != "none":
            self._set_requires_grad(self.discriminator, True)
            pred_real = self.discriminator(y)
            pred_fake_detached = self.discriminator(fake.detach())
            _, gan_d = adversarial_losses(pred_real, pred_fake_detached, cfg.gan_mode)
            self.d_opt.zero_grad()
            gan_d.backward()
            self.d_opt.step()

            self._set_requires_grad(self.discriminator, False)
            pred_fake = self.discriminator(fake)
            gan_g, _ = adversarial_losses(pred_real.detach(), pred_fake, cfg.gan_mode)
        else:
            gan_g, gan_d = zero, zero

        nce_x = self._contrastive(x, fake, w.nce_temperature) if w.lambda_x > 0 else zero
        if w.lambda_y > 0:
            identity = self.generator(y)
            nce_y = self._contrastive(y, identity, w.identity_temperature)
        else:
            nce_y = zero
        sreg = self_regularization_loss(x, fake)

        report = total_loss(gan_g, gan_d, nce_x, nce_y, sreg, w)  # validates finiteness

        objective = weighted_total(gan_g, nce_x, nce_y, sreg, w)
        self.g_opt.zero_grad()
        objective.backward()
        self.g_opt.step()
        if cfg.gan_mode != "none":
            self._set_requires_grad(self.discriminator, True)

        self.iteration += 1
        return report

    # ---- full runs --------------------------------------------------------

    def fit(
        self,
        frozen_set: Sequence,
        ffpe_set: Sequence,
        out_dir: str | Path,
        log_name: str = "train_log.jsonl",
    ) -> list[Path]:
        """Train for cfg.epochs passes over min(|frozen|, |ffpe|) pairs each.

        Both sets are reshuffled every epoch from (seed, epoch). Writes one
        JSON line per iteration and checkpoints `ckpt_<iteration>.bin` at the
        configured interval plus a final one. Resumes transparently when the
        trainer was restored from a checkpoint.
        """
        if not len(frozen_set) or not len(ffpe_set):
            raise ConfigurationError("both training sets must be non-empty")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        steps = min(len(frozen_set), len(ffpe_set))
        total = self.cfg.epochs * steps
        if self.iteration >= total:
            raise ConfigurationError(
                f"nothing to do: iteration {self.iteration} >= epochs*steps = {total}"
            )

        checkpoints: list[Path] = []
        with open(out_dir / log_name, "a", encoding="utf-8") as log:
            while self.iteration < total:
                epoch, offset = divmod(self.iteration, steps)
                order_a = epoch_order(len(frozen_set), self.cfg.seed, epoch, 0)
                order_b = epoch_order(len(ffpe_set), self.cfg.seed, epoch, 1)
                for i in range(offset, steps):
                    started = time.perf_counter()
                    report = self.train_step(
                        frozen_set[int(order_a[i])], ffpe_set[int(order_b[i])]
                    )
                    log.write(
                        report.to_json_line(
                            iteration=self.iteration,
                            epoch=epoch,
                            wall_clock=round(time.perf_counter() - started, 6),
                        )
                        + "\n"
                    )
                    log.flush()
                    if (
                        self.cfg.checkpoint_every
                        and self.iteration % self.cfg.checkpoint_every == 0
                        and self.iteration < total
                    ):
                        checkpoints.append(self.save(out_dir / f"ckpt_{self.iteration}.bin"))
        checkpoints.append(self.save(out_dir / f"ckpt_{self.iteration}.bin"))
        return checkpoints


__all__ = ["Trainer", "epoch_order", "sample_locations"]
