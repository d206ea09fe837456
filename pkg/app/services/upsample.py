"""
Sub-pixel (pixel shuffle) rearrangement and nearest-neighbour upsampling

Inputs are (channels, height, width) tensors. Inside each r x r block the
channel order is row-major: channel c * r^2 + i * r + j lands at row offset i,
column offset j.
"""
import torch
import torch.nn.functional as F

from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.schemas.upsample import ShuffleSpec


def _check_image(x: torch.Tensor) -> None:
    if x.dim() != 3:
        raise ShapeMismatchException(f"Expected (channels, height, width), got {tuple(x.shape)}")


def pixel_shuffle(x: torch.Tensor, r: int) -> torch.Tensor:
    """
    (C r^2, H, W) -> (C, r H, r W) with out[c, r h + i, r w + j] = in[c r^2 + i r + j, h, w].

    Raises:
        ShapeMismatchException: If the channel count is not divisible by r^2
    """
    _check_image(x)
    spec = ShuffleSpec(r=r)
    if x.shape[0] % spec.block:
        raise ShapeMismatchException(
            f"{x.shape[0]} channels are not divisible by r^2 = {spec.block}"
        )
    return F.pixel_shuffle(x.unsqueeze(0), spec.r)[0]


def pixel_unshuffle(x: torch.Tensor, r: int) -> torch.Tensor:
    """
    Exact inverse of pixel_shuffle: (C, r H, r W) -> (C r^2, H, W).

    Raises:
        ShapeMismatchException: If height or width is not divisible by r
    """
    _check_image(x)
    spec = ShuffleSpec(r=r)
    if x.shape[1] % spec.r or x.shape[2] % spec.r:
        raise ShapeMismatchException(
            f"{x.shape[2]}x{x.shape[1]} is not divisible by r = {spec.r}"
        )
    return F.pixel_unshuffle(x.unsqueeze(0), spec.r)[0]


def nearest_upsample(x: torch.Tensor, factor: int) -> torch.Tensor:
    """out[c, h, w] = in[c, h // factor, w // factor]."""
    _check_image(x)
    if factor < 1:
        raise PreconditionException(f"factor must be a positive integer, got {factor}")
    return x.repeat_interleave(factor, dim=1).repeat_interleave(factor, dim=2)
