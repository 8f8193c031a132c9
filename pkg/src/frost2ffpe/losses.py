"""The hybrid training objective.

Least-squares (or logistic) adversarial terms, the (M+1)-way noise
contrastive loss over unit-sphere embeddings, its patch-wise aggregation
with same-image negatives, the pixel-wise L1 self-regularization, and the
weighted total. All functions are pure and differentiable; detaching
(e.g. of contrastive keys) is the caller's responsibility.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .errors import LossInputError
from .models.projection import FeatureStack

UNIT_NORM_TOL = 1e-4


@dataclass(frozen=True)
class LossWeights:
    """Weights and temperatures of the total objective."""

    lambda_x: float = 1.0        # PatchNCE on the source-domain pass
    lambda_y: float = 1.0        # PatchNCE on the target-domain identity pass
    lambda_sreg: float = 10.0    # pixel-wise self-regularization
    nce_temperature: float = 0.07
    identity_temperature: float = 0.08

    def __post_init__(self) -> None:
        if min(self.lambda_x, self.lambda_y, self.lambda_sreg) < 0:
            raise LossInputError("loss weights must be non-negative")
        if self.nce_temperature <= 0 or self.identity_temperature <= 0:
            raise LossInputError("temperatures must be positive")

    def to_dict(self) -> dict:
        return {
            "lambda_x": self.lambda_x,
            "lambda_y": self.lambda_y,
            "lambda_sreg": self.lambda_sreg,
            "nce_temperature": self.nce_temperature,
            "identity_temperature": self.identity_temperature,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LossWeights":
        return cls(**doc)


@dataclass
class LossReport:
    """Per-iteration loss components; `total` is the generator-side objective."""

    gan_g: float
    gan_d: float
    patchnce_x: float
    patchnce_y: float
    sreg: float
    total: float

    def to_dict(self) -> dict:
        return {
            "gan_g": self.gan_g,
            "gan_d": self.gan_d,
            "patchnce_x": self.patchnce_x,
            "patchnce_y": self.patchnce_y,
            "sreg": self.sreg,
            "total": self.total,
        }

    def to_json_line(self, **extra) -> str:
        doc = dict(extra)
        doc.update(self.to_dict())
        return json.dumps(doc)


def _as_tensor(value) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value
    return torch.as_tensor(value)


def adversarial_losses(
    real_scores: torch.Tensor,
    fake_scores: torch.Tensor,
    mode: str = "lsgan",
) -> tuple[torch.Tensor, torch.Tensor]:
    """Generator and discriminator adversarial terms from score maps.

    Least-squares form (default): gan_d = mean((real-1)^2)/2 + mean(fake^2)/2
    and gan_g = mean((fake-1)^2). The logistic form is the non-saturating
    log loss.
    """
    real_scores = _as_tensor(real_scores)
    fake_scores = _as_tensor(fake_scores)
    if real_scores.numel() == 0 or fake_scores.numel() == 0:
        raise LossInputError("empty score map")
    if not (torch.isfinite(real_scores).all() and torch.isfinite(fake_scores).all()):
        raise LossInputError("non-finite values in score maps")
    if mode == "lsgan":
        gan_d = 0.5 * ((real_scores - 1.0) ** 2).mean() + 0.5 * (fake_scores ** 2).mean()
        gan_g = ((fake_scores - 1.0) ** 2).mean()
    elif mode == "logistic":
        gan_d = F.softplus(-real_scores).mean() + F.softplus(fake_scores).mean()
        gan_g = F.softplus(-fake_scores).mean()
    else:
        raise LossInputError(f"unknown adversarial mode {mode!r}")
    return gan_g, gan_d


def _check_unit(name: str, vectors: torch.Tensor) -> None:
    norms = vectors.detach().norm(dim=-1)
    err = float((norms - 1.0).abs().max())
    if err > UNIT_NORM_TOL:
        raise LossInputError(
            f"{name} must be unit-norm (max deviation {err:.3g}); normalization is the caller's job"
        )


def nce_loss(
    v: torch.Tensor,
    v_plus: torch.Tensor,
    v_minus: torch.Tensor,
    temperature: float = 0.07,
) -> torch.Tensor:
    """(M+1)-way contrastive cross-entropy for one query vector.

    Returns -log[exp(v.v+/t) / (exp(v.v+/t) + sum_n exp(v.v-_n/t))],
    strictly positive for M >= 1.
    """
    v = _as_tensor(v)
    v_plus = _as_tensor(v_plus)
    v_minus = _as_tensor(v_minus)
    if temperature <= 0:
        raise LossInputError(f"temperature must be positive, got {temperature}")
    if v.ndim != 1 or v_plus.ndim != 1 or v_minus.ndim != 2:
        raise LossInputError(
            f"expected v (L,), v_plus (L,), v_minus (M, L); got {tuple(v.shape)}, "
            f"{tuple(v_plus.shape)}, {tuple(v_minus.shape)}"
        )
    if v_minus.shape[0] < 1:
        raise LossInputError("at least one negative is required")
    _check_unit("v", v)
    _check_unit("v_plus", v_plus)
    _check_unit("v_minus", v_minus)

    pos = (v * v_plus).sum() / temperature
    neg = (v_minus @ v) / temperature
    logits = torch.cat([pos.reshape(1), neg])
    return torch.logsumexp(logits, dim=0) - pos


def patch_nce_loss(
    query_stack: FeatureStack,
    key_stack: FeatureStack,
    temperature: float = 0.07,
) -> torch.Tensor:
    """Patch-wise NCE over matched feature stacks.

    Queries come from the translated image, keys from the source image at
    identical locations; the negatives for each location are the keys at the
    same layer's other locations. The result is the mean contrastive loss
    over every (layer, location) pair.
    """
    if temperature <= 0:
        raise LossInputError(f"temperature must be positive, got {temperature}")
    if query_stack.layer_ids != key_stack.layer_ids:
        raise LossInputError(
            f"layer ids differ: {query_stack.layer_ids} vs {key_stack.layer_ids}"
        )
    per_location: list[torch.Tensor] = []
    for layer, q, k, lq, lk in zip(
        query_stack.layer_ids,
        query_stack.embeddings,
        key_stack.embeddings,
        query_stack.locations,
        key_stack.locations,
    ):
        if q.shape != k.shape:
            raise LossInputError(f"layer {layer}: embedding shapes differ: {tuple(q.shape)} vs {tuple(k.shape)}")
        if lq.shape != lk.shape or bool((lq != lk).any()):
            raise LossInputError(f"layer {layer}: locations must be sampled identically from both stacks")
        n = q.shape[0]
        if n < 2:
            raise LossInputError(
                f"layer {layer}: PatchNCE needs >= 2 locations (got {n}); the negatives set would be empty"
            )
        _check_unit(f"layer {layer} queries", q)
        _check_unit(f"layer {layer} keys", k)
        logits = (q @ k.transpose(0, 1)) / temperature  # (n, n): row s vs all key locations
        log_denominator = torch.logsumexp(logits, dim=1)
        per_location.append(log_denominator - logits.diagonal())
    return torch.cat(per_location).mean()


def self_regularization_loss(x: torch.Tensor, gx: torch.Tensor) -> torch.Tensor:
    """Mean absolute pixel difference between input and translated output."""
    x = _as_tensor(x)
    gx = _as_tensor(gx)
    if x.shape != gx.shape:
        raise LossInputError(f"shape mismatch: {tuple(x.shape)} vs {tuple(gx.shape)}")
    if x.numel() == 0:
        raise LossInputError("empty inputs")
    return (x - gx).abs().mean()


def weighted_total(
    gan_g: torch.Tensor,
    patchnce_x: torch.Tensor,
    patchnce_y: torch.Tensor,
    sreg: torch.Tensor,
    weights: LossWeights,
) -> torch.Tensor:
    """Generator-side objective: gan_g + l_sreg*sreg + l_x*nce_x + l_y*nce_y."""
    return (
        gan_g
        + weights.lambda_sreg * sreg
        + weights.lambda_x * patchnce_x
        + weights.lambda_y * patchnce_y
    )


def total_loss(
    gan_g: float | torch.Tensor,
    gan_d: float | torch.Tensor,
    patchnce_x: float | torch.Tensor,
    patchnce_y: float | torch.Tensor,
    sreg: float | torch.Tensor,
    weights: LossWeights,
) -> LossReport:
    """Assemble the per-iteration report; rejects non-finite parts by name."""

    def _scalar(value) -> float:
        if isinstance(value, torch.Tensor):
            return float(value.detach())
        return float(value)

    parts = {
        "gan_g": _scalar(gan_g),
        "gan_d": _scalar(gan_d),
        "patchnce_x": _scalar(patchnce_x),
        "patchnce_y": _scalar(patchnce_y),
        "sreg": _scalar(sreg),
    }
    for name, value in parts.items():
        if not math.isfinite(value):
            raise LossInputError(f"non-finite loss part {name!r}: {value}")
    total = (
        parts["gan_g"]
        + weights.lambda_sreg * parts["sreg"]
        + weights.lambda_x * parts["patchnce_x"]
        + weights.lambda_y * parts["patchnce_y"]
    )
    return LossReport(total=total, **parts)


__all__ = [
    "LossReport",
    "LossWeights",
    "UNIT_NORM_TOL",
    "adversarial_losses",
    "nce_loss",
    "patch_nce_loss",
    "self_regularization_loss",
    "total_loss",
    "weighted_total",
]
