"""One-directional unpaired training."""

from .config import TrainConfig
from .loop import Trainer, epoch_order, sample_locations

__all__ = ["TrainConfig", "Trainer", "epoch_order", "sample_locations"]
