import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.color import rgb2lab

from oracles import srgb_to_lab
from svxgerry.core import (
    MaskSequence,
    ScoreField,
    VideoVolume,
    downscale_volume,
    rgb_to_lab,
    rgb_to_lab_array,
    upscale_labels,
)


def test_white_is_achromatic_100():
    lab = rgb_to_lab((255, 255, 255))
    assert lab.L == pytest.approx(100.0, abs=1e-9)
    assert abs(lab.a) < 0.01 and abs(lab.b) < 0.01


def test_black_is_zero():
    lab = rgb_to_lab((0, 0, 0))
    assert (lab.L, lab.a, lab.b) == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)


def test_mid_gray_matches_reference_formula():
    L_ref, a_ref, b_ref = srgb_to_lab(128, 128, 128)
    lab = rgb_to_lab((128, 128, 128))
    assert lab.L == pytest.approx(L_ref, abs=1e-9)
    assert abs(lab.a) < 0.01 and abs(lab.b) < 0.01
    # second opinion from scikit-image (same white point, matrix differs past 4 decimals)
    assert lab.L == pytest.approx(rgb2lab(np.full((1, 1, 3), 128 / 255.0))[0, 0, 0], abs=1e-3)


def test_lab_array_agrees_with_scikit_image(rng):
    rgb = rng.integers(0, 256, size=(20, 20, 3))
    ours = rgb_to_lab_array(rgb)
    ref = rgb2lab(rgb / 255.0)
    # scikit-image derives its matrix slightly differently; agreement is to ~1e-4
    np.testing.assert_allclose(ours, ref, atol=1e-3)


def test_gray_ramp_is_strictly_monotone_in_L():
    L = rgb_to_lab_array(np.repeat(np.arange(256)[:, None], 3, axis=1))[:, 0]
    assert np.all(np.diff(L) > 0)


def test_rgb_to_lab_rejects_out_of_range():
    with pytest.raises(ValueError):
        rgb_to_lab((0, 0, 256))


def test_video_volume_invariants():
    with pytest.raises(ValueError):
        VideoVolume(np.zeros((1, 4, 4, 3), np.uint8))
    with pytest.raises(ValueError):
        VideoVolume(np.zeros((2, 4, 4), np.uint8))
    v = VideoVolume(np.zeros((3, 5, 7, 3), np.uint8))
    assert (v.frame_count, v.height, v.width) == (3, 5, 7)
    with pytest.raises(ValueError):
        v.frames[0, 0, 0, 0] = 1


def test_score_field_checks_range():
    ScoreField(np.array([0.0, 1.0]), (0.0, 1.0))
    with pytest.raises(ValueError):
        ScoreField(np.array([0.0, 1.5]), (0.0, 1.0))


def test_mask_sequence_rejects_non_binary():
    with pytest.raises(ValueError):
        MaskSequence(np.array([[[0, 2]]]))
    assert MaskSequence(np.array([[[0, 1]]])).values.dtype == bool


def test_downscale_identity():
    v = VideoVolume(np.random.default_rng(0).integers(0, 256, (2, 5, 6, 3)).astype(np.uint8))
    assert downscale_volume(v, 1) is v


def test_downscale_constant_frame():
    v = VideoVolume(np.full((2, 4, 4, 3), (10, 200, 33), np.uint8))
    out = downscale_volume(v, 2)
    assert out.shape == (2, 2, 2)
    assert np.all(out.frames == np.array([10, 200, 33], np.uint8))


def test_downscale_rounds_half_up():
    frames = np.zeros((2, 2, 2, 3), np.uint8)
    frames[:, 1, :, :] = 255  # {0, 0, 255, 255} -> 127.5 -> 128
    out = downscale_volume(VideoVolume(frames), 2)
    assert out.shape == (2, 1, 1)
    assert np.all(out.frames == 128)


def test_downscale_partial_edge_boxes():
    frames = np.zeros((2, 5, 5, 3), np.uint8)
    frames[:, 4, 4] = 90
    frames[:, 4, 3] = 30
    out = downscale_volume(VideoVolume(frames), 2)
    assert out.shape == (2, 3, 3)
    # bottom-right box covers only pixel (4, 4); bottom-middle covers (4, 2) and (4, 3)
    assert out.frames[0, 2, 2, 0] == 90
    assert out.frames[0, 2, 1, 0] == 15


def test_downscale_bad_factor():
    v = VideoVolume(np.zeros((2, 4, 4, 3), np.uint8))
    with pytest.raises(ValueError):
        downscale_volume(v, 0)


@settings(max_examples=40, deadline=None)
@given(
    color=st.tuples(*[st.integers(0, 255)] * 3),
    h=st.integers(1, 12),
    w=st.integers(1, 12),
    factor=st.integers(1, 6),
)
def test_constant_volume_stays_constant(color, h, w, factor):
    v = VideoVolume(np.broadcast_to(np.array(color, np.uint8), (2, h, w, 3)).copy())
    out = downscale_volume(v, factor)
    assert out.shape == (2, -(-h // factor), -(-w // factor))
    assert np.all(out.frames == np.array(color, np.uint8))


def test_upscale_identity_and_single():
    labels = np.arange(12).reshape(1, 3, 4)
    np.testing.assert_array_equal(upscale_labels(labels, 3, 4), labels)
    np.testing.assert_array_equal(upscale_labels(np.full((1, 1, 1), 7), 3, 3), np.full((1, 3, 3), 7))


def test_upscale_checkerboard_blocks():
    labels = np.array([[[0, 1], [1, 0]]])
    out = upscale_labels(labels, 4, 4)
    expected = np.zeros((1, 4, 4), int)
    for y in range(4):
        for x in range(4):
            expected[0, y, x] = labels[0, y // 2, x // 2]
    np.testing.assert_array_equal(out, expected)


def test_upscale_rejects_smaller_target():
    with pytest.raises(ValueError):
        upscale_labels(np.zeros((1, 4, 4), int), 3, 4)


@settings(max_examples=40, deadline=None)
@given(h=st.integers(1, 6), w=st.integers(1, 6), fy=st.integers(1, 4), seed=st.integers(0, 1000))
def test_upscale_preserves_alphabet(h, w, fy, seed):
    labels = np.random.default_rng(seed).integers(0, 5, (2, h, w))
    out = upscale_labels(labels, h * fy, w * fy)
    assert set(np.unique(out)) == set(np.unique(labels))


def test_upscale_with_factor_inverts_partial_boxes():
    labels = np.arange(9).reshape(1, 3, 3)
    out = upscale_labels(labels, 5, 5, factor=2)
    assert out.shape == (1, 5, 5)
    assert out[0, 4, 4] == 8 and out[0, 3, 3] == 4 and out[0, 0, 1] == 0
    assert set(np.unique(out)) == set(range(9))
