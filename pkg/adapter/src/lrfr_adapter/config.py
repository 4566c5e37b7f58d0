"""Run configuration for detection and embedding export."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class AdapterConfig:
    """Settings for one embed/export run.

    ``model`` is a backend spec string (see models.load_embedder);
    ``input_size`` must match what the chosen model expects (typically 112
    or 224 for face models).
    """

    model: str
    input_size: int
    normalization: str = "center-scale"
    device: str = "cpu"
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.input_size < 1:
            raise ValueError(f"input_size must be >= 1, got {self.input_size}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
