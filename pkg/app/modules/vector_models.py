from typing import ClassVar, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class ProfileVector(BaseModel):
    """Dense representation of one profile or occupation text."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    source: str
    warnings: Tuple[str, ...] = ()

    @field_validator("values", mode="before")
    @classmethod
    def coerce_values(cls, v):
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError(f"Profile vectors must be non-empty 1-D arrays, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Profile vectors must contain only finite values")
        arr.setflags(write=False)
        return arr

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


class MatchScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    orientation: ClassVar[str] = "higher = better match"

    value: float
    # Set when cosine met a zero vector and fell back to 0
    degenerate: bool = False

    @field_validator("value")
    @classmethod
    def check_finite(cls, v: float) -> float:
        if not np.isfinite(v):
            raise ValueError(f"Match scores must be finite, got {v}")
        return float(v)


class VectorizedPairs(BaseModel):
    """Row-aligned left/right matrices plus good/bad labels for one split."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    left: np.ndarray
    right: np.ndarray
    good: np.ndarray

    @model_validator(mode="after")
    def check_shapes(self) -> "VectorizedPairs":
        if self.left.ndim != 2 or self.left.shape != self.right.shape:
            raise ValueError(f"Pair matrices must share one 2-D shape, got {self.left.shape} / {self.right.shape}")
        if self.good.shape != (self.left.shape[0],):
            raise ValueError("Need exactly one label per pair")
        return self

    @property
    def dim(self) -> int:
        return int(self.left.shape[1])

    @property
    def n_good(self) -> int:
        return int(np.count_nonzero(self.good))

    @property
    def n_bad(self) -> int:
        return int(self.good.shape[0] - self.n_good)
