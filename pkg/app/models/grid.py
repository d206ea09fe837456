"""
Dense real-valued grids and image pyramids
"""
from typing import Any, List

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Every tensor in the pipeline is double precision.
DTYPE = torch.float64


class Grid(BaseModel):
    """
    A width x height x channels array of finite reals.

    ``data`` is a read-only float64 array of shape (height, width, channels):
    row-major, channel-minor. Differentiable kernels use the tensor view
    (channels, height, width) from :meth:`to_tensor`.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray = Field(..., description="float64 array of shape (height, width, channels)")

    @field_validator("data", mode="before")
    @classmethod
    def validate_data(cls, value: Any) -> np.ndarray:
        array = np.array(value, dtype=np.float64)
        if array.ndim == 2:
            array = array[:, :, np.newaxis]
        if array.ndim != 3:
            raise ValueError(f"Grid data must have 2 or 3 dimensions, got {array.ndim}")
        if min(array.shape) < 1:
            raise ValueError(f"Grid dimensions must be positive, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("Grid data contains non-finite values")
        array.flags.writeable = False
        return array

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def plane(self, channel: int = 0) -> np.ndarray:
        """Return one channel as a (height, width) array."""
        return self.data[:, :, channel]

    def to_tensor(self) -> torch.Tensor:
        """Return a fresh (channels, height, width) float64 tensor."""
        return torch.tensor(self.data.transpose(2, 0, 1), dtype=DTYPE)

    @classmethod
    def from_tensor(cls, tensor: torch.Tensor) -> "Grid":
        """Build a grid from a (channels, height, width) or (height, width) tensor."""
        array = tensor.detach().cpu().to(DTYPE).numpy()
        if array.ndim == 3:
            array = array.transpose(1, 2, 0)
        return cls(data=array)

    @classmethod
    def constant(cls, width: int, height: int, channels: int = 1, value: float = 0.0) -> "Grid":
        return cls(data=np.full((height, width, channels), value, dtype=np.float64))

    def same_dims(self, other: "Grid") -> bool:
        """True when both grids share width and height."""
        return self.width == other.width and self.height == other.height

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None  # type: ignore[assignment]


class Pyramid(BaseModel):
    """Ordered grid levels where level s is level 0 downsampled by 2^s."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    levels: List[Grid] = Field(..., min_length=1, description="Level 0 is the source grid")

    @model_validator(mode="after")
    def validate_halving(self) -> "Pyramid":
        for index in range(1, len(self.levels)):
            previous, current = self.levels[index - 1], self.levels[index]
            if (current.width * 2, current.height * 2) != (previous.width, previous.height):
                raise ValueError(
                    f"Level {index} is {current.width}x{current.height}, expected half of "
                    f"{previous.width}x{previous.height}"
                )
        return self

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, index: int) -> Grid:
        return self.levels[index]

