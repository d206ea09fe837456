"""
Image pyramids built by repeated 2x2 block averaging
"""
from typing import List

import numpy as np
import torch
import torch.nn.functional as F

from app.core.exceptions import PreconditionException
from app.models.grid import Grid, Pyramid


def _check_divisible(width: int, height: int, num_levels: int) -> None:
    if num_levels < 1:
        raise PreconditionException(f"num_levels must be at least 1, got {num_levels}")
    factor = 2 ** (num_levels - 1)
    if width % factor or height % factor:
        raise PreconditionException(
            f"{width}x{height} is not divisible by {factor} (needed for {num_levels} levels)"
        )


def block_average(data: np.ndarray) -> np.ndarray:
    """Halve a (height, width, channels) array by averaging 2x2 blocks."""
    height, width, channels = data.shape
    blocks = data.reshape(height // 2, 2, width // 2, 2, channels)
    return blocks.mean(axis=(1, 3))


def build_pyramid(image: Grid, num_levels: int) -> Pyramid:
    """
    Build a pyramid whose level s is ``image`` block-averaged s times.

    Args:
        image: Level 0
        num_levels: Number of levels including level 0

    Returns:
        Pyramid with level s sized (W / 2^s, H / 2^s)

    Raises:
        PreconditionException: If the dims are not divisible by 2^(num_levels - 1)
    """
    _check_divisible(image.width, image.height, num_levels)
    levels = [image]
    for _ in range(1, num_levels):
        levels.append(Grid(data=block_average(levels[-1].data)))
    return Pyramid(levels=levels)


def tensor_pyramid(image: torch.Tensor, num_levels: int) -> List[torch.Tensor]:
    """
    Differentiable counterpart of build_pyramid for (channels, height, width) tensors.

    Uses 2x2 average pooling, which is the same block mean.
    """
    _check_divisible(image.shape[-1], image.shape[-2], num_levels)
    levels = [image]
    for _ in range(1, num_levels):
        levels.append(F.avg_pool2d(levels[-1].unsqueeze(0), kernel_size=2)[0])
    return levels


def downsample_to_scale(image: torch.Tensor, scale: int) -> torch.Tensor:
    """Block-average a (channels, height, width) tensor down by 2^scale."""
    if scale == 0:
        return image
    factor = 2 ** scale
    _check_divisible(image.shape[-1], image.shape[-2], scale + 1)
    return F.avg_pool2d(image.unsqueeze(0), kernel_size=factor)[0]
