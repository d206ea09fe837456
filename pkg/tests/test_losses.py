"""
Tests for SSIM, photometric error, minimum reprojection and smoothness losses
"""
import numpy as np
import pytest
import torch

from app.core.exceptions import PreconditionException, ShapeMismatchException
from app.models.grid import DTYPE, Grid
from app.schemas.losses import LossBreakdown, LossConfig, ScaleLoss
from app.services.losses import (
    compute_total_loss,
    interior_mask,
    local_mean,
    min_reprojection_loss,
    photometric_error,
    robust_abs,
    scaled_border,
    smoothness_loss,
    ssim,
    total_loss,
)
from app.services.pyramid import build_pyramid

pytestmark = pytest.mark.unit

C1 = 1e-4


def _const(value: float, channels: int = 3, height: int = 4, width: int = 4) -> torch.Tensor:
    return torch.full((channels, height, width), value, dtype=DTYPE)


@pytest.fixture
def image_pair(rng):
    """Two random 3-channel 6x5 images"""
    a = torch.tensor(rng.uniform(size=(3, 6, 5)), dtype=DTYPE)
    b = torch.tensor(rng.uniform(size=(3, 6, 5)), dtype=DTYPE)
    return a, b


# ==================== SSIM ====================


def test_ssim_identical_is_one(image_pair):
    """Test SSIM of an image with itself"""
    a, _ = image_pair
    np.testing.assert_allclose(ssim(a, a).numpy(), 1.0, atol=1e-12)


def test_ssim_constant_zero_vs_one():
    """Test zero variances reduce SSIM to c1 / (1 + c1)"""
    result = ssim(_const(0.0), _const(1.0), c1=1e-4, c2=9e-4)
    np.testing.assert_allclose(result.numpy(), C1 / (1.0 + C1), rtol=1e-12)
    assert result[0, 0].item() == pytest.approx(9.999e-5, rel=1e-4)


def test_ssim_symmetric_and_bounded(image_pair):
    """Test ssim(a, b) = ssim(b, a) and values lie in [-1, 1]"""
    a, b = image_pair
    forward = ssim(a, b)
    np.testing.assert_allclose(forward.numpy(), ssim(b, a).numpy(), atol=1e-15)
    assert forward.min() >= -1.0 and forward.max() <= 1.0


def test_ssim_shape_mismatch():
    """Test differing dims are rejected"""
    with pytest.raises(ShapeMismatchException):
        ssim(_const(0.0), _const(0.0, width=5))


def test_local_mean_reflect_gradient_weights():
    """Test mirrored taps route gradient back to edge-adjacent pixels"""
    x = torch.zeros((1, 3, 3), dtype=DTYPE, requires_grad=True)
    local_mean(x).sum().backward()
    # 1-D tap counts under reflect padding are (2, 5, 2); 2-D counts are products
    counts = np.outer([2, 5, 2], [2, 5, 2]) / 9.0
    np.testing.assert_allclose(x.grad[0].numpy(), counts, atol=1e-15)


def test_local_mean_single_row_replicates():
    """Test a 1-pixel-high map falls back to edge replication"""
    x = torch.tensor([[[1.0, 2.0, 3.0, 4.0]]], dtype=DTYPE)
    np.testing.assert_allclose(local_mean(x)[0, 0].numpy(), [4 / 3, 2.0, 3.0, 11 / 3], rtol=1e-14)


def test_ssim_on_single_column():
    """Test SSIM and pe accept 1-pixel-wide images"""
    a = torch.linspace(0.1, 0.9, 5, dtype=DTYPE).reshape(1, 5, 1).expand(3, 5, 1)
    np.testing.assert_allclose(ssim(a, a).numpy(), 1.0, atol=1e-12)
    assert photometric_error(a, a, LossConfig()).shape == (5, 1)


# ==================== PHOTOMETRIC ERROR ====================


def test_photometric_error_identical_is_zero(image_pair):
    """Test pe vanishes for identical inputs"""
    a, _ = image_pair
    assert photometric_error(a, a, LossConfig()).abs().max().item() <= 1e-12


def test_photometric_error_constant_images():
    """Test pe of constant 0 against constant 1 with alpha 0.85"""
    pe = photometric_error(_const(0.0), _const(1.0), LossConfig(alpha=0.85))
    expected = 0.425 * (1.0 - C1 / (1.0 + C1)) + 0.15
    np.testing.assert_allclose(pe.numpy(), expected, rtol=1e-12)
    assert pe[0, 0].item() == pytest.approx(0.574958, abs=1e-6)


def test_photometric_error_alpha_zero_is_l1(image_pair):
    """Test alpha 0 leaves the channel-mean absolute difference"""
    a, b = image_pair
    pe = photometric_error(a, b, LossConfig(alpha=0.0))
    np.testing.assert_allclose(pe.numpy(), (a - b).abs().mean(dim=0).numpy(), atol=1e-15)


def test_photometric_error_non_negative(image_pair):
    """Test pe is never negative"""
    a, b = image_pair
    assert photometric_error(a, b, LossConfig()).min().item() >= 0.0


def test_robust_abs_dead_zone():
    """Test tiny differences count as zero with zero gradient"""
    x = torch.tensor([1e-13, -0.5, 0.0], dtype=DTYPE, requires_grad=True)
    y = robust_abs(x)
    y.sum().backward()
    assert y.tolist() == [0.0, 0.5, 0.0]
    assert x.grad.tolist() == [0.0, -1.0, 0.0]


# ==================== MINIMUM REPROJECTION ====================


def test_min_reprojection_single_identical_candidate(image_pair):
    """Test a perfect candidate gives zero loss"""
    a, _ = image_pair
    loss, error_map = min_reprojection_loss(a, [a.clone()], LossConfig())
    assert loss.item() == pytest.approx(0.0, abs=1e-12)
    assert tuple(error_map.shape) == (6, 5)


def test_min_reprojection_takes_pixelwise_minimum(mocker):
    """Test min-then-mean over stubbed pe maps"""
    maps = [
        torch.tensor([[1.0, 3.0], [2.0, 0.0]], dtype=DTYPE),
        torch.tensor([[2.0, 1.0], [5.0, 0.0]], dtype=DTYPE),
    ]
    mocker.patch("app.services.losses.photometric_error", side_effect=maps)
    image = _const(0.0, height=2, width=2)

    loss, error_map = min_reprojection_loss(image, [image, image], LossConfig())

    assert error_map.tolist() == [[1.0, 1.0], [2.0, 0.0]]
    assert loss.item() == 1.0


def test_min_reprojection_bounded_by_each_candidate(image_pair, rng):
    """Test L_p never exceeds the mean pe of any single candidate"""
    a, b = image_pair
    c = torch.tensor(rng.uniform(size=(3, 6, 5)), dtype=DTYPE)
    cfg = LossConfig()
    loss, _ = min_reprojection_loss(a, [b, c], cfg)
    for candidate in (b, c):
        assert loss.item() <= photometric_error(a, candidate, cfg).mean().item() + 1e-15


def test_min_reprojection_errors(image_pair):
    """Test empty candidate lists and mismatched candidates"""
    a, _ = image_pair
    with pytest.raises(PreconditionException):
        min_reprojection_loss(a, [], LossConfig())
    with pytest.raises(ShapeMismatchException):
        min_reprojection_loss(a, [_const(0.0)], LossConfig())


def test_min_reprojection_masked_mean(mocker):
    """Test the optional region restricts the mean"""
    mocker.patch(
        "app.services.losses.photometric_error",
        return_value=torch.tensor([[4.0, 0.0], [0.0, 0.0]], dtype=DTYPE),
    )
    image = _const(0.0, height=2, width=2)
    valid = torch.tensor([[True, False], [False, False]])
    loss, _ = min_reprojection_loss(image, [image], LossConfig(), valid)
    assert loss.item() == 4.0


# ==================== SMOOTHNESS ====================


def test_smoothness_constant_disparity_is_zero(image_pair):
    """Test flat disparity has no smoothness cost"""
    a, _ = image_pair
    assert smoothness_loss(torch.full((6, 5), 0.3, dtype=DTYPE), a).item() == 0.0


def test_smoothness_one_by_two():
    """Test the hand-computed 1x2 case"""
    disp = torch.tensor([[1.0, 3.0]], dtype=DTYPE)
    image = _const(0.5, height=1, width=2)
    assert smoothness_loss(disp, image).item() == pytest.approx(1.0, abs=1e-15)


def test_smoothness_scale_invariant(rng):
    """Test multiplying disparity by a positive constant leaves L_s unchanged"""
    disp = torch.tensor(rng.uniform(0.1, 1.0, size=(6, 5)), dtype=DTYPE)
    image = torch.tensor(rng.uniform(size=(3, 6, 5)), dtype=DTYPE)
    base = smoothness_loss(disp, image).item()
    for factor in (0.01, 3.0, 250.0):
        assert smoothness_loss(disp * factor, image).item() == pytest.approx(base, abs=1e-9)


def test_smoothness_edge_aware():
    """Test an image edge at the disparity edge lowers the cost"""
    disp = torch.ones((4, 4), dtype=DTYPE)
    disp[:, 2:] = 2.0
    flat = _const(0.5)
    edged = _const(0.0)
    edged[:, :, 2:] = 1.0
    assert smoothness_loss(disp, edged).item() < smoothness_loss(disp, flat).item()


def test_smoothness_errors():
    """Test non-positive mean and mismatched dims"""
    with pytest.raises(PreconditionException):
        smoothness_loss(torch.zeros((4, 4), dtype=DTYPE), _const(0.0))
    with pytest.raises(ShapeMismatchException):
        smoothness_loss(torch.ones((3, 4), dtype=DTYPE), _const(0.0))


# ==================== TOTAL LOSS ====================


def test_interior_mask_and_scaled_border():
    """Test border erosion and its per-level rounding"""
    assert interior_mask(4, 4, 0) is None
    mask = interior_mask(6, 5, 1)
    assert int(mask.sum()) == 4 * 3
    assert not bool(mask[0].any())
    assert scaled_border(3, 1) == 2
    assert scaled_border(2, 2) == 1
    with pytest.raises(PreconditionException):
        interior_mask(4, 4, 2)


def test_total_loss_arithmetic(mocker):
    """Test mu * L_p + lambda * L_s at a single scale"""
    mocker.patch(
        "app.services.losses.min_reprojection_loss",
        return_value=(torch.tensor(0.5, dtype=DTYPE), torch.zeros((4, 4), dtype=DTYPE)),
    )
    mocker.patch("app.services.losses.smoothness_loss", return_value=torch.tensor(2.0, dtype=DTYPE))
    cfg = LossConfig(mu=1.0, lambda_=1e-3, scales=[0])
    target = Grid(data=np.zeros((4, 4, 3)))

    breakdown = total_loss(build_pyramid(target, 1), [[target]], [Grid.constant(4, 4, value=0.5)], cfg)

    assert breakdown.total == pytest.approx(0.502, abs=1e-15)
    assert breakdown.per_scale == [ScaleLoss(scale=0, photometric=0.5, smoothness=2.0)]


def test_total_loss_zero_at_perfect_reconstruction(rng):
    """Test warped = target and flat disparity give zero at every scale"""
    target = Grid(data=rng.uniform(size=(8, 8, 3)))
    pyramid = build_pyramid(target, 3)
    cfg = LossConfig(scales=[0, 1, 2])
    breakdown = total_loss(
        pyramid,
        [[level] for level in pyramid.levels],
        [Grid.constant(level.width, level.height, value=0.4) for level in pyramid.levels],
        cfg,
    )
    assert breakdown.total == pytest.approx(0.0, abs=1e-12)
    assert len(breakdown.per_scale) == 3
    assert breakdown.min_error_map.shape == (8, 8, 1)


def test_min_error_map_is_full_resolution_without_scale_zero(rng):
    """Test coarse-only scales still return the full-resolution min-error map"""
    target = Grid(data=rng.uniform(size=(8, 8, 3)))
    warped = Grid(data=rng.uniform(size=(8, 8, 3)))
    cfg = LossConfig(scales=[1])
    target_pyr = build_pyramid(target, 2)
    warped_pyr = build_pyramid(warped, 2)

    breakdown = total_loss(
        target_pyr, [[warped_pyr[1]]], [Grid.constant(4, 4, value=0.5)], cfg, full_scale_warped=[warped]
    )

    assert breakdown.min_error_map.shape == (8, 8, 1)
    expected = photometric_error(target.to_tensor(), warped.to_tensor(), cfg).numpy()
    np.testing.assert_allclose(breakdown.min_error_map.plane(0), expected, rtol=1e-12)
    with pytest.raises(PreconditionException):
        total_loss(target_pyr, [[warped_pyr[1]]], [Grid.constant(4, 4, value=0.5)], cfg)


def test_total_loss_linear_in_weights(rng):
    """Test doubling mu doubles the photometric contribution"""
    target = rng.uniform(size=(3, 8, 8))
    warped = rng.uniform(size=(3, 8, 8))
    disp = rng.uniform(0.2, 0.8, size=(8, 8))
    levels = [torch.tensor(target, dtype=DTYPE)]

    def total(mu: float, lambda_: float) -> float:
        cfg = LossConfig(mu=mu, lambda_=lambda_, scales=[0])
        terms = compute_total_loss(
            levels, [[torch.tensor(warped, dtype=DTYPE)]], [torch.tensor(disp, dtype=DTYPE)], cfg
        )
        return terms.total.item()

    photometric = total(1.0, 0.0)
    smooth = total(0.0, 1.0)
    assert total(2.0, 0.0) == pytest.approx(2.0 * photometric, rel=1e-14)
    assert total(1.0, 1e-3) == pytest.approx(photometric + 1e-3 * smooth, rel=1e-12)


def test_total_loss_scale_mismatch(rng):
    """Test per-scale inputs must match the configured scales"""
    target = Grid(data=rng.uniform(size=(4, 4, 3)))
    with pytest.raises(ShapeMismatchException):
        total_loss(build_pyramid(target, 2), [[target]], [Grid.constant(4, 4, value=0.5)], LossConfig(scales=[0, 1]))


def test_breakdown_recomputes_total():
    """Test the total is recoverable from the parts"""
    breakdown = LossBreakdown(
        total=0.2515,
        per_scale=[
            ScaleLoss(scale=0, photometric=0.3, smoothness=1.0),
            ScaleLoss(scale=1, photometric=0.2, smoothness=2.0),
        ],
        min_error_map=Grid.constant(2, 2),
    )
    assert breakdown.recompute_total(1.0, 1e-3) == pytest.approx(breakdown.total, abs=1e-12)


def test_loss_config_alias_and_validation():
    """Test the 'lambda' alias and scale validation"""
    assert LossConfig.model_validate({"lambda": 0.5}).lambda_ == 0.5
    assert LossConfig(scales=[2, 0]).scales == [0, 2]
    assert LossConfig(scales=[0, 3]).num_levels == 4
    with pytest.raises(ValueError):
        LossConfig(scales=[1, 1])
    with pytest.raises(ValueError):
        LossConfig(alpha=1.5)
