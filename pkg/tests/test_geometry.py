"""
Tests for pinhole geometry, rigid transforms and resampling
"""
import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.models.camera import BASELINE_INTRINSICS, LEARNED_INTRINSICS, FlowGrid, Intrinsics, RigidTransform
from app.models.grid import DTYPE
from app.services.geometry import (
    assemble_k,
    axis_angle_to_rotation,
    backproject,
    bilinear_sample,
    compose_transform,
    depth_to_disparity,
    disparity_to_depth,
    intrinsics_from_raw,
    inverse_softplus,
    invert_k,
    kt_transfer,
    project,
    raw_from_intrinsics,
    softplus,
    unnormalize,
    warp_image,
)

pytestmark = pytest.mark.unit


# ==================== INTRINSICS ====================


def test_softplus_values():
    """Test softplus at zero and at both tails"""
    assert softplus(0.0) == pytest.approx(math.log(2.0), abs=1e-12)
    assert softplus(100.0) == pytest.approx(100.0, abs=1e-12)
    tiny = softplus(-100.0)
    assert tiny > 0.0
    assert tiny == pytest.approx(math.exp(-100.0), rel=1e-12)


def test_softplus_tensor_matches_scalar():
    """Test the tensor branch agrees with the scalar branch"""
    values = torch.tensor([-30.0, -1.0, 0.0, 2.5, 40.0], dtype=DTYPE)
    expected = [softplus(float(v)) for v in values]
    assert softplus(values).tolist() == pytest.approx(expected, rel=1e-13)


def test_inverse_softplus():
    """Test inverse_softplus undoes softplus and rejects non-positive inputs"""
    assert softplus(inverse_softplus(0.58)) == pytest.approx(0.58, rel=1e-14)
    with pytest.raises(PreconditionException):
        inverse_softplus(0.0)


def test_raw_intrinsics_round_trip():
    """Test raw parameters map back to the same intrinsics"""
    raw = raw_from_intrinsics(LEARNED_INTRINSICS)
    restored = intrinsics_from_raw(raw)
    np.testing.assert_allclose(restored.numpy(), LEARNED_INTRINSICS.as_list(), rtol=1e-13)
    # Offsets pass through unchanged
    assert raw[2:].tolist() == [LEARNED_INTRINSICS.cx, LEARNED_INTRINSICS.cy]


def test_assemble_k_baseline():
    """Test the fixed baseline K at 640x192"""
    k = assemble_k(BASELINE_INTRINSICS, 640, 192)
    np.testing.assert_allclose(
        k.numpy(), [[371.2, 0.0, 320.0], [0.0, 368.64, 96.0], [0.0, 0.0, 1.0]], rtol=1e-12
    )


def test_assemble_k_identity_like():
    """Test unit focals and zero offsets give diag(W, H, 1)"""
    k = assemble_k(Intrinsics(fx=1.0, fy=1.0, cx=0.0, cy=0.0), 40, 24)
    assert k.tolist() == [[40.0, 0.0, 0.0], [0.0, 24.0, 0.0], [0.0, 0.0, 1.0]]


def test_assemble_k_scales_with_level():
    """Test level s uses the dims divided by 2^s"""
    k = assemble_k(BASELINE_INTRINSICS, 640, 192, scale=2)
    np.testing.assert_allclose(k[0, 0].item(), 0.58 * 160, rtol=1e-12)
    np.testing.assert_allclose(k[1, 2].item(), 0.5 * 48, rtol=1e-12)
    with pytest.raises(PreconditionException):
        assemble_k(BASELINE_INTRINSICS, 6, 6, scale=2)


def test_invert_k_examples():
    """Test closed-form inverses"""
    assert invert_k(torch.eye(3, dtype=DTYPE)).tolist() == torch.eye(3, dtype=DTYPE).tolist()
    inverse = invert_k([[2.0, 0.0, 1.0], [0.0, 4.0, 1.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(
        inverse.numpy(), [[0.5, 0.0, -0.5], [0.0, 0.25, -0.25], [0.0, 0.0, 1.0]], atol=1e-15
    )


def test_invert_k_product_is_identity():
    """Test K @ K^-1 = I for the learned intrinsics"""
    k = assemble_k(LEARNED_INTRINSICS, 640, 192)
    np.testing.assert_allclose((k @ invert_k(k)).numpy(), np.eye(3), atol=1e-12)


def test_invert_k_errors():
    """Test zero focal and non-triangular inputs are rejected"""
    with pytest.raises(PreconditionException):
        invert_k([[0.0, 0.0, 1.0], [0.0, 4.0, 1.0], [0.0, 0.0, 1.0]])
    with pytest.raises(PreconditionException):
        invert_k([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ShapeMismatchException):
        invert_k(torch.eye(2, dtype=DTYPE))


# ==================== RIGID TRANSFORMS ====================


def test_rotation_of_zero_is_identity():
    """Test the zero axis-angle"""
    assert axis_angle_to_rotation([0.0, 0.0, 0.0]).tolist() == torch.eye(3, dtype=DTYPE).tolist()


def test_rotation_quarter_turn_about_z():
    """Test a quarter turn against scipy's rotation-vector conversion"""
    rotation = axis_angle_to_rotation([0.0, 0.0, math.pi / 2])
    expected = Rotation.from_rotvec([0.0, 0.0, math.pi / 2]).as_matrix()
    np.testing.assert_allclose(rotation.numpy(), expected, atol=1e-12)
    np.testing.assert_allclose(rotation.numpy(), [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-12)


def test_rotation_small_angle_gradient_is_finite():
    """Test the small-angle branch keeps gradients finite at zero"""
    v = torch.zeros(3, dtype=DTYPE, requires_grad=True)
    axis_angle_to_rotation(v).sum().backward()
    assert torch.isfinite(v.grad).all()


def test_rotation_rejects_non_finite():
    """Test NaN axis-angles are rejected"""
    with pytest.raises(PreconditionException):
        axis_angle_to_rotation([float("nan"), 0.0, 0.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1.8, 1.8, allow_nan=False), min_size=3, max_size=3))
def test_rotation_is_orthonormal(vector):
    """Test R^T R = I and det R = 1 for random axis-angles"""
    rotation = axis_angle_to_rotation(vector).numpy()
    assert np.max(np.abs(rotation.T @ rotation - np.eye(3))) < 1e-9
    assert abs(np.linalg.det(rotation) - 1.0) < 1e-9
    np.testing.assert_allclose(rotation, Rotation.from_rotvec(vector).as_matrix(), atol=1e-12)


def test_compose_identity_and_inverse_translation():
    """Test identity composition and inversion of a pure translation"""
    assert compose_transform([0, 0, 0], [0, 0, 0]).matrix.tolist() == torch.eye(4, dtype=DTYPE).tolist()
    inverse = compose_transform([0, 0, 0], [1.0, 2.0, 3.0], invert=True)
    assert inverse.translation.tolist() == [-1.0, -2.0, -3.0]


def test_compose_invert_is_exact_inverse(rng):
    """Test T(v, t) @ T(v, t, invert) = I"""
    for _ in range(20):
        v = rng.uniform(-1.0, 1.0, size=3)
        t = rng.normal(size=3)
        forward = compose_transform(v, t).matrix
        backward = compose_transform(v, t, invert=True).matrix
        np.testing.assert_allclose((forward @ backward).numpy(), np.eye(4), atol=1e-12)


def test_rigid_transform_rejects_reflection():
    """Test the model refuses a determinant -1 block"""
    with pytest.raises(ValueError):
        RigidTransform(matrix=torch.diag(torch.tensor([1.0, 1.0, -1.0, 1.0], dtype=DTYPE)))


# ==================== DEPTH AND WARPING ====================


def test_disparity_to_depth_examples():
    """Test both endpoints and the midpoint"""
    disp = torch.tensor([1.0, 0.0, 0.5], dtype=DTYPE)
    depth = disparity_to_depth(disp, 0.1, 100.0)
    assert depth[0].item() == pytest.approx(0.1, rel=1e-15)
    assert depth[1].item() == pytest.approx(100.0, rel=1e-15)
    assert depth[2].item() == pytest.approx(1.0 / 5.005, rel=1e-12)
    assert depth[2].item() == pytest.approx(0.199800, abs=1e-6)


def test_disparity_to_depth_is_decreasing():
    """Test depth decreases strictly as disparity grows"""
    depth = disparity_to_depth(torch.linspace(0.0, 1.0, 101, dtype=DTYPE), 0.1, 100.0)
    assert torch.all(depth[1:] < depth[:-1])
    back = depth_to_disparity(depth, 0.1, 100.0)
    np.testing.assert_allclose(back.numpy(), np.linspace(0.0, 1.0, 101), atol=1e-12)


def test_disparity_to_depth_errors():
    """Test out-of-range disparity and depth bounds"""
    with pytest.raises(PreconditionException):
        disparity_to_depth(torch.tensor([1.2], dtype=DTYPE), 0.1, 100.0)
    with pytest.raises(PreconditionException):
        disparity_to_depth(torch.tensor([0.5], dtype=DTYPE), 10.0, 1.0)


def test_backproject_identity_k():
    """Test K = I lifts (u, v) to depth * (u, v, 1)"""
    depth = torch.full((5, 4), 4.0, dtype=DTYPE)
    points = backproject(depth, torch.eye(3, dtype=DTYPE))
    assert points[:, 3, 2].tolist() == [8.0, 12.0, 4.0]

    unit = backproject(torch.ones((2, 3), dtype=DTYPE), torch.eye(3, dtype=DTYPE))
    assert unit[:, 1, 2].tolist() == [2.0, 1.0, 1.0]


def test_backproject_rejects_non_positive_depth():
    """Test zero depth is refused"""
    with pytest.raises(PreconditionException):
        backproject(torch.zeros((2, 2), dtype=DTYPE), torch.eye(3, dtype=DTYPE))


def test_project_identity_spans_unit_square():
    """Test identity K and T map corners to -1 and +1"""
    depth = torch.full((6, 9), 2.0, dtype=DTYPE)
    k = torch.eye(3, dtype=DTYPE)
    flow = project(backproject(depth, k), k, RigidTransform.identity(), 9, 6)
    assert flow.coords[0, 0].tolist() == pytest.approx([-1.0, -1.0], abs=1e-15)
    assert flow.coords[-1, -1].tolist() == pytest.approx([1.0, 1.0], abs=1e-15)
    assert bool(flow.valid.all())
    np.testing.assert_allclose(unnormalize(flow, 9, 6)[2, 7].numpy(), [7.0, 2.0], atol=1e-12)


def test_project_principal_point():
    """Test the optical axis lands on the baseline principal point"""
    width, height = 640, 192
    points = torch.zeros((3, height, width), dtype=DTYPE)
    points[2] = 1.0
    k = assemble_k(BASELINE_INTRINSICS, width, height)
    flow = project(points, k, RigidTransform.identity(), width, height)
    pixel = unnormalize(flow, width, height)[0, 0]
    np.testing.assert_allclose(pixel.numpy(), [320.0, 96.0], atol=1e-9)
    assert flow.coords[0, 0, 0].item() == pytest.approx(2 * 320 / 639 - 1, abs=1e-12)
    assert flow.coords[0, 0, 0].item() == pytest.approx(0.001565, abs=1e-6)


def test_project_flags_points_behind_camera():
    """Test translation past the image plane invalidates pixels"""
    depth = torch.ones((2, 2), dtype=DTYPE)
    k = torch.eye(3, dtype=DTYPE)
    flow = project(backproject(depth, k), k, compose_transform([0, 0, 0], [0, 0, -2.0]), 2, 2)
    assert not bool(flow.valid.any())
    assert not bool(flow.in_bounds().any())


def test_in_bounds_tolerates_edge_rounding():
    """Test frame-edge coords a few ulps past +/-1 still count as inside"""
    coords = torch.tensor([[[1.0 + 4e-15, -1.0 - 4e-15], [1.001, 0.0]]], dtype=DTYPE)
    flow = FlowGrid(coords=coords, valid=torch.ones((1, 2), dtype=torch.bool))
    assert flow.in_bounds().tolist() == [[True, False]]


@pytest.mark.parametrize("size", [16, 32])
def test_identity_reprojection_stays_in_frame(size):
    """Test every pixel reprojects inside the frame under the identity pose"""
    k = assemble_k(BASELINE_INTRINSICS, size, size)
    depth = torch.full((size, size), 0.35, dtype=DTYPE)
    flow = project(backproject(depth, invert_k(k)), k, RigidTransform.identity(), size, size)
    assert bool(flow.in_bounds().all())


def test_project_shape_mismatch():
    """Test points must match the declared dims"""
    with pytest.raises(ShapeMismatchException):
        project(torch.ones((3, 2, 2), dtype=DTYPE), torch.eye(3, dtype=DTYPE), RigidTransform.identity(), 3, 2)


def _flow(x: float, y: float) -> FlowGrid:
    return FlowGrid(
        coords=torch.tensor([[[x, y]]], dtype=DTYPE),
        valid=torch.tensor([[True]]),
    )


def test_bilinear_sample_midpoint():
    """Test interpolation halfway between two pixels"""
    image = torch.tensor([[[10.0, 20.0]]], dtype=DTYPE)
    assert bilinear_sample(image, _flow(0.0, 0.0)).item() == pytest.approx(15.0, abs=1e-12)


def test_bilinear_sample_padding_rules():
    """Test zeros and border padding outside the image"""
    image = torch.tensor([[[10.0, 20.0, 30.0, 40.0, 50.0]]], dtype=DTYPE)
    assert bilinear_sample(image, _flow(2.0, 0.0), padding="zeros").item() == 0.0
    assert bilinear_sample(image, _flow(2.0, 0.0), padding="border").item() == pytest.approx(50.0)
    with pytest.raises(PreconditionException):
        bilinear_sample(image, _flow(0.0, 0.0), padding="reflect")


def test_bilinear_sample_zero_where_invalid():
    """Test invalid pixels sample to zero"""
    image = torch.ones((1, 2, 2), dtype=DTYPE)
    flow = FlowGrid(coords=torch.zeros((1, 1, 2), dtype=DTYPE), valid=torch.tensor([[False]]))
    assert bilinear_sample(image, flow).item() == 0.0


def test_warp_identity(rng):
    """Test an identity pose reproduces the image for any K and depth"""
    for _ in range(5):
        image = torch.tensor(rng.uniform(size=(3, 6, 10)), dtype=DTYPE)
        depth = torch.tensor(rng.uniform(0.5, 20.0, size=(6, 10)), dtype=DTYPE)
        intrinsics = Intrinsics(
            fx=rng.uniform(0.3, 2.0), fy=rng.uniform(0.3, 2.0), cx=rng.uniform(0, 1), cy=rng.uniform(0, 1)
        )
        warped, flow = warp_image(image, depth, assemble_k(intrinsics, 10, 6), RigidTransform.identity())
        np.testing.assert_allclose(warped.numpy(), image.numpy(), atol=1e-9)
        assert bool(flow.valid.all())


# ==================== K*t AMBIGUITY ====================


def test_kt_transfer_examples():
    """Test the hand-computed transfer and the identity case"""
    t_alt = kt_transfer(np.eye(3), [1.0, 1.0, 1.0], np.diag([2.0, 2.0, 1.0]))
    np.testing.assert_allclose(t_alt, [0.5, 0.5, 1.0], atol=1e-15)
    np.testing.assert_allclose(np.diag([2.0, 2.0, 1.0]) @ t_alt, [1.0, 1.0, 1.0], atol=1e-15)

    k = assemble_k(BASELINE_INTRINSICS, 640, 192)
    np.testing.assert_allclose(kt_transfer(k, [0.3, -0.1, 0.2], k), [0.3, -0.1, 0.2], atol=1e-12)


def test_kt_transfer_between_learned_and_fixed_k(rng):
    """Test the learned and fixed K explain the same K t"""
    k_learned = assemble_k(LEARNED_INTRINSICS, 640, 192).numpy()
    k_fixed = assemble_k(BASELINE_INTRINSICS, 640, 192).numpy()
    for _ in range(10):
        t = rng.normal(size=3)
        t_alt = kt_transfer(k_learned, t, k_fixed)
        np.testing.assert_allclose(k_fixed @ t_alt, k_learned @ t, rtol=1e-12, atol=1e-9)


def test_kt_transfer_singular():
    """Test a singular K_alt is rejected"""
    with pytest.raises(PreconditionException):
        kt_transfer(np.eye(3), [1.0, 0.0, 0.0], np.diag([1.0, 0.0, 1.0]))
