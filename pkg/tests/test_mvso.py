import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from oracles import mvso_chain
from svxgerry.mvso import (
    align_flows,
    compute_initial_estimate,
    flow_components,
    initial_mask,
    initial_masks,
    keep_top_components,
    motion_saliency,
    scale_f0,
)


def test_components_of_simple_vectors():
    flows = np.array([[[[3.0, 4.0], [1.0, 1.0]]]])
    c = flow_components(flows)
    assert c.magnitude[0, 0, 0] == 25.0
    assert flow_components(flows, "sqrt").magnitude[0, 0, 0] == 5.0
    assert c.angle[0, 0, 1] == pytest.approx(math.pi / 4)
    with pytest.raises(ValueError):
        flow_components(flows, "cubic")


def test_negative_zero_is_folded():
    flows = np.array([[[[-0.0, -0.0], [-1.0, -0.0]]]])
    c = flow_components(flows)
    assert c.angle[0, 0, 0] == 0.0
    assert c.angle[0, 0, 1] == pytest.approx(math.pi)


def test_align_flows():
    f = np.arange(2 * 1 * 1 * 2, dtype=float).reshape(2, 1, 1, 2)
    out = align_flows(f, 3)
    assert out.shape[0] == 3
    np.testing.assert_array_equal(out[2], f[1])
    with pytest.raises(ValueError):
        align_flows(f, 5)


def test_motion_saliency_single_outlier():
    comp = np.array([[[0.0] * 10 + [10.0]]])
    out = motion_saliency(comp)
    assert out[0, 0, -1] == 10.0
    assert not out[0, 0, :-1].any()


def test_motion_saliency_alpha_gate():
    kept = motion_saliency(np.array([[[1.0, 1, 1, 1, 4]]]))
    assert kept[0, 0, 4] == pytest.approx(0.5 * 3.0)
    # alpha = 4/14 < 0.5, so nothing survives
    dropped = motion_saliency(np.array([[[1.0] * 10 + [4.0]]]))
    assert not dropped.any()


def test_single_moving_pixel_hand_computed():
    flows = np.zeros((1, 2, 2, 2))
    flows[0, 1, 1, 0] = 4.0
    vis = np.ones((1, 2, 2))
    est = compute_initial_estimate(flows, vis, keep_measures=True)
    # x: motion 4, magnitude: motion 16, visual flow term 1*4 + 1*16 = 20 per exponent
    assert est.measures.count == 7
    assert [m[0, 1, 1] for m in est.measures.motion] == [4.0, 0.0, 16.0, 0.0]
    assert [m[0, 1, 1] for m in est.measures.visual] == [20.0, 20.0, 20.0]
    assert est.f0.values[0, 1, 1] == 80.0
    assert est.f0.values.sum() == 80.0
    assert est.f0_scaled.values[0, 1, 1] == 1.0
    assert est.m0.values[0].tolist() == [[False, False], [False, True]]


def test_visual_uses_floor_scale_when_no_outliers():
    # uniform flow 1 everywhere except one pixel at 0: nothing is an outlier on x
    flows = np.zeros((1, 1, 8, 2))
    flows[0, 0, :, 0] = [1, 1, 1, 1, 1, 1, 0.5, 1]
    vis = np.full((1, 1, 8), 0.25)
    est = compute_initial_estimate(flows, vis, keep_measures=True)
    x_dev = 0.5
    # x: 0.5 * |0.5 - 1|; magnitude: 0.25 vs median 1 is an outlier (alpha tiny) -> 0.5 * 0.75
    flow_term = 0.5 * x_dev + 0.5 * 0.75
    expected = [0.25**e * flow_term for e in (1.0, 0.5, 1.0 / 3.0)]
    got = [m[0, 0, 6] for m in est.measures.visual]
    assert got == pytest.approx(expected, abs=1e-12)


def test_scale_f0():
    f0 = np.array([[[0.0, 2.0], [1.0, 4.0]], [[0.0, 0.0], [0.0, 0.0]]])
    s = scale_f0(f0).values
    np.testing.assert_array_equal(s[0], [[0, 0.5], [0.25, 1.0]])
    assert not s[1].any()
    v = scale_f0(f0 * [[[1]], [[0]]] + [[[0]], [[2]]], scope="video").values
    assert v.max() == 1.0 and v[1, 0, 0] == 0.5
    with pytest.raises(ValueError):
        scale_f0(f0, scope="pixel")


def test_keep_top_components_by_sum():
    mask = np.array([[1, 0, 1, 0, 1]], bool)
    score = np.array([[5.0, 0, 3.0, 0, 1.0]])
    assert keep_top_components(mask, score, 2).tolist() == [[True, False, True, False, False]]
    assert keep_top_components(mask, score, 1).tolist() == [[True, False, False, False, False]]


def test_keep_top_ties():
    # equal sums: larger component wins
    mask = np.array([[1, 0, 1, 1]], bool)
    score = np.array([[2.0, 0, 1.0, 1.0]])
    assert keep_top_components(mask, score, 1).tolist() == [[False, False, True, True]]
    # equal sums and sizes: first in row-major order wins
    mask = np.array([[0, 1], [0, 0], [1, 0]], bool)
    score = np.ones((3, 2))
    assert keep_top_components(mask, score, 1).tolist() == [[False, True], [False, False], [False, False]]


def test_keep_top_connectivity():
    mask = np.eye(3, dtype=bool)
    assert keep_top_components(mask, mask * 1.0, 1, connectivity=8).sum() == 3
    assert keep_top_components(mask, mask * 1.0, 1, connectivity=4).sum() == 1


def test_initial_mask_picks_strongest_blob():
    f = np.zeros((10, 10))
    f[1:3, 1:3] = 5.0
    f[6:9, 6:9] = 4.0  # bigger area, larger sum 36 > 20
    m = initial_mask(f)
    assert m[7, 7] and not m[1, 1]


def test_initial_mask_empty_when_flat():
    assert not initial_mask(np.ones((5, 5))).any()


def test_previous_mask_halves_threshold():
    f = np.zeros((6, 6))
    f[2, 2] = 10.0
    f[3, 3] = 1.0
    beta = f.mean() + f.std()
    assert 0.5 * beta < 1.0 < beta
    assert initial_mask(f).tolist() == (f == 10.0).tolist()
    prev = np.zeros((6, 6), bool)
    prev[3, 3] = True
    # the diagonal neighbour now clears the discounted bar and joins the component
    assert initial_mask(f, prev).tolist() == (f > 0).tolist()


def test_initial_masks_chain_previous():
    f0 = np.zeros((3, 4, 4))
    f0[:, 1, 1] = 1.0
    m = initial_masks(f0)
    assert m[:, 1, 1].all() and m.sum() == 3


def _nested(a):
    return a.tolist()


@pytest.mark.parametrize("seed", range(6))
def test_chain_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    T, H, W = 4, 16, 16
    flows = rng.integers(-3, 4, (T, H, W, 2)).astype(float)
    flows[:, 4:8, 4:8] += rng.integers(5, 9)
    vis = rng.random((T, H, W))
    est = compute_initial_estimate(flows, vis)
    f0_ref, masks_ref = mvso_chain(_nested(flows), _nested(vis))
    np.testing.assert_allclose(est.f0.values, np.array(f0_ref), rtol=1e-12, atol=1e-12)
    np.testing.assert_array_equal(est.m0.values, np.array(masks_ref))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_chain_invariants(seed):
    rng = np.random.default_rng(seed)
    flows = rng.normal(size=(3, 6, 7, 2)) * rng.integers(1, 5)
    vis = rng.random((3, 6, 7))
    est = compute_initial_estimate(flows, vis)
    assert est.f0.values.min() >= 0.0
    s = est.f0_scaled.values
    assert s.min() >= 0.0 and s.max() <= 1.0
    for t in range(3):
        assert s[t].max() in (0.0, 1.0)
        # at most one component per frame
        assert ndimage.label(est.m0.values[t], structure=np.ones((3, 3)))[1] <= 1
