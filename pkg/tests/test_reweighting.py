import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glrfair.exceptions import DataError
from glrfair.reweighting import clip_normalize, propensity_weights, uniform_weights, \
    write_weights_csv


def test_uniform():
    np.testing.assert_array_equal(uniform_weights(4), np.ones(4))
    with pytest.raises(DataError):
        uniform_weights(0)


def test_clip_one_gives_ones(rng):
    np.testing.assert_array_equal(clip_normalize(rng.uniform(0.1, 9, size=7), 1.0), np.ones(7))


def test_clip_normalize_without_active_bounds():
    out = clip_normalize(np.array([1.0, 2.0, 3.0]), 10.0)
    np.testing.assert_allclose(out, [0.5, 1.0, 1.5], rtol=1e-15)


def test_clip_normalize_rejects_bad_input():
    with pytest.raises(DataError):
        clip_normalize(np.array([1.0, -1.0]), 10)
    with pytest.raises(DataError):
        clip_normalize(np.array([1.0]), 0.5)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=60), st.floats(1.0, 50.0))
def test_clip_normalize_properties(w, clip):
    out = clip_normalize(np.array(w), clip)
    assert abs(out.mean() - 1.0) <= 1e-12
    assert out.min() >= 1.0 / clip - 1e-12
    assert out.max() <= clip + 1e-12
    # order preserving
    order = np.argsort(w, kind="stable")
    assert np.all(np.diff(out[order]) >= -1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=30), st.floats(1e-3, 1e3))
def test_clip_normalize_scale_invariant(w, scale):
    a = clip_normalize(np.array(w), 10.0)
    b = clip_normalize(np.array(w) * scale, 10.0)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_identical_domains_give_unit_weights(rng):
    X = rng.normal(size=(50, 3))
    w = propensity_weights(X, X.copy())
    np.testing.assert_allclose(w, 1.0, atol=1e-12)


def test_shifted_domains(rng):
    Xs = rng.normal(size=(200, 1))
    Xt = rng.normal(1.0, 1.0, size=(300, 1))
    w = propensity_weights(Xs, Xt, clip=10.0)
    assert abs(w.mean() - 1) <= 1e-12
    assert w.min() >= 0.1 - 1e-12 and w.max() <= 10 + 1e-12
    # rows that look like the target get more weight
    order = np.argsort(Xs[:, 0])
    assert np.all(np.diff(w[order]) >= -1e-12)
    assert w[order[-1]] > 5 * w[order[0]]


def test_propensity_shape_errors(rng):
    with pytest.raises(DataError):
        propensity_weights(rng.normal(size=(5, 2)), rng.normal(size=(5, 3)))
    with pytest.raises(DataError):
        propensity_weights(np.empty((0, 2)), rng.normal(size=(5, 2)))


def test_write_weights(tmp_path):
    path = tmp_path / "w.csv"
    write_weights_csv([0.5, 1.5], path)
    assert path.read_text() == "row_index,weight\n0,0.5\n1,1.5\n"
