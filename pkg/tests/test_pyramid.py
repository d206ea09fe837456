"""
Tests for pyramid construction
"""
import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from app.core.exceptions import PreconditionException
from app.models.grid import Grid, Pyramid
from app.services.pyramid import build_pyramid, downsample_to_scale, tensor_pyramid

pytestmark = pytest.mark.unit


def test_kitti_resolution_schedule():
    """Test 192x640 halves three times"""
    pyramid = build_pyramid(Grid.constant(640, 192, channels=3, value=0.25), 4)
    assert [(level.height, level.width) for level in pyramid.levels] == [
        (192, 640), (96, 320), (48, 160), (24, 80),
    ]
    assert all(np.all(level.data == 0.25) for level in pyramid.levels)


def test_block_mean_of_two_by_two():
    """Test the 2x2 block mean"""
    pyramid = build_pyramid(Grid(data=[[1.0, 2.0], [3.0, 4.0]]), 2)
    assert pyramid[1].data.ravel().tolist() == [2.5]


def test_indivisible_dims():
    """Test dims not divisible by 2^(levels-1) are rejected"""
    with pytest.raises(PreconditionException):
        build_pyramid(Grid.constant(6, 4), 3)


def test_zero_levels():
    """Test at least one level is required"""
    with pytest.raises(PreconditionException):
        build_pyramid(Grid.constant(4, 4), 0)


def test_pyramid_model_rejects_wrong_halving():
    """Test Pyramid validates its level dims"""
    with pytest.raises(ValueError):
        Pyramid(levels=[Grid.constant(4, 4), Grid.constant(3, 2)])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (8, 16, 2), elements=st.floats(-10, 10, allow_nan=False)))
def test_mean_preserved(data):
    """Test every level keeps the mean of level 0"""
    pyramid = build_pyramid(Grid(data=data), 4)
    for level in pyramid.levels:
        assert level.data.mean() == pytest.approx(data.mean(), abs=1e-12)


def test_tensor_pyramid_matches_grid_pyramid(rng):
    """Test the differentiable pyramid agrees with the numpy one"""
    grid = Grid(data=rng.uniform(size=(16, 8, 3)))
    levels = tensor_pyramid(grid.to_tensor(), 3)
    for tensor, level in zip(levels, build_pyramid(grid, 3).levels):
        np.testing.assert_allclose(tensor.numpy(), level.to_tensor().numpy(), atol=1e-15)


def test_downsample_to_scale(rng):
    """Test one-shot downsampling equals repeated halving"""
    image = torch.tensor(rng.uniform(size=(1, 8, 8)))
    np.testing.assert_allclose(
        downsample_to_scale(image, 2).numpy(), tensor_pyramid(image, 3)[2].numpy(), atol=1e-15
    )
    assert downsample_to_scale(image, 0) is image
