"""
Tests for procedural scene synthesis
"""
import numpy as np
import pytest
import torch

from app.core.exceptions import PreconditionException, SceneConfigurationException
from app.models.grid import DTYPE
from app.models.scene import TextureSpec
from app.services.geometry import assemble_k, backproject, invert_k, project, unnormalize
from app.services.scene_synthesis import (
    BACKGROUND_RATIO,
    FOREGROUND_RATIO,
    REFERENCE_DEPTH,
    ProceduralTexture,
    make_scene,
    render_scene,
)

pytestmark = pytest.mark.unit


def test_zero_pose_sources_equal_target():
    """Test a zero pose magnitude renders identical frames"""
    scene = make_scene(16, 16, "fronto-plane", pose_magnitude=0.0, seed=2)
    for source in scene.sources:
        np.testing.assert_allclose(source.data, scene.target.data, atol=1e-12)


@pytest.mark.parametrize("size", [16, 32])
def test_zero_pose_full_coverage(size):
    """Test an exact warp counts every pixel, edges included, as covered"""
    scene = make_scene(size, size, "fronto-plane", pose_magnitude=0.0, seed=1)
    assert scene.coverage == [1.0, 1.0]


def test_fronto_scene_coverage(fronto_scene):
    """Test a 2 px shift loses exactly two columns of 32"""
    assert fronto_scene.coverage == pytest.approx([30 / 32, 30 / 32])


def test_fronto_plane_flow_is_constant_shift(fronto_scene):
    """Test pure x translation shifts every pixel by fx_pixels * t_x / d"""
    width, height = fronto_scene.width, fronto_scene.height
    np.testing.assert_allclose(fronto_scene.gt_depth.data, REFERENCE_DEPTH, rtol=1e-12)

    k = assemble_k(fronto_scene.gt_intrinsics, width, height)
    points = backproject(fronto_scene.gt_depth.to_tensor()[0], invert_k(k))
    pixels = unnormalize(project(points, k, fronto_scene.gt_poses[1], width, height), width, height)

    t_x = fronto_scene.gt_pose_vectors[1][3]
    expected = fronto_scene.gt_intrinsics.fx * width * t_x / REFERENCE_DEPTH
    assert expected == pytest.approx(fronto_scene.pose_magnitude)
    u = torch.arange(width, dtype=DTYPE).expand(height, width)
    v = torch.arange(height, dtype=DTYPE).unsqueeze(1).expand(height, width)
    np.testing.assert_allclose((pixels[..., 0] - u).numpy(), expected, atol=1e-9)
    np.testing.assert_allclose((pixels[..., 1] - v).numpy(), 0.0, atol=1e-9)


def test_sources_move_in_opposite_directions(fronto_scene):
    """Test previous and next frames use mirrored translations"""
    previous, following = fronto_scene.gt_pose_vectors
    assert previous[3] == -following[3]
    assert fronto_scene.frames[1] is fronto_scene.target


def test_same_seed_same_scene():
    """Test scene generation is deterministic"""
    first = make_scene(16, 16, "slanted-plane", pose_magnitude=1.0, seed=11)
    second = make_scene(16, 16, "slanted-plane", pose_magnitude=1.0, seed=11)
    assert first.target == second.target
    assert all(a == b for a, b in zip(first.sources, second.sources))
    assert first.gt_depth == second.gt_depth


def test_different_seed_changes_texture():
    """Test the seed drives the texture"""
    first = make_scene(16, 16, pose_magnitude=1.0, seed=1)
    second = make_scene(16, 16, pose_magnitude=1.0, seed=2)
    assert first.target != second.target


def test_size_and_coverage_errors():
    """Test undersized scenes and excessive parallax are rejected"""
    with pytest.raises(PreconditionException):
        make_scene(8, 32)
    with pytest.raises(SceneConfigurationException):
        make_scene(32, 32, pose_magnitude=8.0)


def test_render_scene_skips_validation():
    """Test small scenes are still renderable without the checks"""
    scene = render_scene(8, 8, pose_magnitude=3.0)
    assert scene.target.shape == (8, 8, 3)
    assert min(scene.coverage) < 0.9


def test_two_layer_depths():
    """Test the central rectangle sits in front of the background"""
    scene = make_scene(32, 32, "two-layer", pose_magnitude=1.0, seed=4)
    depth = scene.gt_depth.plane(0)
    assert depth[16, 16] == pytest.approx(FOREGROUND_RATIO * REFERENCE_DEPTH)
    assert depth[0, 0] == pytest.approx(BACKGROUND_RATIO * REFERENCE_DEPTH)
    np.testing.assert_allclose(depth[8:24, 8:24], FOREGROUND_RATIO * REFERENCE_DEPTH, rtol=1e-12)
    np.testing.assert_allclose(depth[:, :8], BACKGROUND_RATIO * REFERENCE_DEPTH, rtol=1e-12)


def test_slanted_plane_depth_falls_down_the_image():
    """Test the slanted plane's depth decreases with row and meets the reference at the principal point"""
    scene = make_scene(32, 32, "slanted-plane", pose_magnitude=1.0, seed=4)
    depth = scene.gt_depth.plane(0)
    assert np.all(np.diff(depth[:, 0]) < 0)
    np.testing.assert_allclose(depth[16], REFERENCE_DEPTH, rtol=1e-12)


def test_photometric_offset_only_touches_sources():
    """Test the offset is added to the source frames"""
    scene = render_scene(16, 16, pose_magnitude=0.0, photometric_offset=0.05)
    np.testing.assert_allclose(scene.sources[0].data - scene.target.data, 0.05, atol=1e-12)


def test_procedural_texture_is_deterministic_and_bounded(rng):
    """Test the texture depends only on its spec and stays inside its amplitude band"""
    spec = TextureSpec(frequency=4.0, seed=7)
    x, y = rng.uniform(-1, 1, size=(2, 50))
    first = ProceduralTexture(spec, world_width=0.5)(x, y)
    second = ProceduralTexture(spec, world_width=0.5)(x, y)
    np.testing.assert_array_equal(first, second)
    assert first.shape == (50, 3)
    assert first.min() >= 0.5 - 3 * 0.12 and first.max() <= 0.5 + 3 * 0.12
