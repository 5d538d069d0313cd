import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import tukey
from svxgerry.outliers import outlier_mask, outlier_scale, quartiles, summarize, tukey_fences

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_constant_data_has_no_outliers():
    s, mask = summarize([5, 5, 5, 5])
    assert (s.q1, s.q2, s.q3) == (5, 5, 5)
    assert not mask.any()
    assert s.alpha == 0.0


def test_quartiles_odd_and_even():
    assert quartiles([1, 2, 3, 4, 5]) == (2.0, 3.0, 4.0)
    assert quartiles([1, 2, 3, 4]) == (1.75, 2.5, 3.25)
    assert quartiles([7]) == (7.0, 7.0, 7.0)


def test_quartiles_order_invariant(rng):
    x = rng.normal(size=101)
    assert quartiles(x) == quartiles(rng.permutation(x))


def test_fences():
    assert tukey_fences(2, 4, 1.5) == (-1.0, 7.0)
    assert tukey_fences(2, 4, 0.0) == (2.0, 4.0)
    with pytest.raises(ValueError):
        tukey_fences(4, 2)


def test_outlier_mask_is_strict():
    assert outlier_mask([-5, 0, 10], -1, 7).tolist() == [True, False, True]
    assert outlier_mask([-1, 7], -1, 7).tolist() == [False, False]


def test_alpha_examples():
    s, mask = summarize([1, 1, 1, 1, 4])
    assert mask.tolist() == [False] * 4 + [True]
    assert s.alpha == pytest.approx(0.5, abs=1e-12)
    assert outlier_scale([0, 0, 0], [True, False, False]) == 0.0
    assert outlier_scale([1, 2], [False, False]) == 0.0


def test_empty_rejected():
    with pytest.raises(ValueError):
        quartiles([])


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=60))
def test_matches_oracle(values):
    s, mask = summarize(values)
    (q1, q2, q3), (o1, o3), flags, alpha = tukey(values)
    assert (s.q1, s.q2, s.q3) == (q1, q2, q3)
    assert mask.tolist() == flags
    assert s.alpha == pytest.approx(alpha, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=60))
def test_invariants(values):
    s, mask = summarize(values)
    assert s.q1 <= s.q2 <= s.q3
    assert s.o1 <= s.q1 and s.o3 >= s.q3
    assert 0.0 <= s.alpha <= 1.0
    # nothing between the fences is flagged
    x = np.asarray(values)
    assert not mask[(x >= s.o1) & (x <= s.o3)].any()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=40), st.integers(-50, 50))
def test_translation_moves_quartiles_and_keeps_outliers(values, shift):
    a, ma = summarize(values)
    b, mb = summarize([v + shift for v in values])
    assert (b.q1, b.q2, b.q3) == pytest.approx((a.q1 + shift, a.q2 + shift, a.q3 + shift))
    assert ma.tolist() == mb.tolist()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=40), st.sampled_from([0.5, 2.0, 4.0, -1.0]))
def test_scaling_keeps_outliers_and_alpha(values, c):
    # powers of two keep every intermediate exact
    a, ma = summarize(values)
    b, mb = summarize([v * c for v in values])
    assert ma.tolist() == mb.tolist()
    assert b.alpha == pytest.approx(a.alpha, abs=1e-12)
