"""Properties of the stochastic view transforms."""
import numpy as np
import pytest

from sleepssl.errors import ConfigError, InputTooShort
from sleepssl.transforms import (
    KINDS,
    MIN_SEGMENT,
    RngStream,
    TransformSpec,
    _split_points,
    apply_transform,
    make_view_pair,
)

_STOCHASTIC = [k for k in KINDS if k != "identity"]


def _signal(rng, n=3072):
    return rng.normal(size=n)


@pytest.mark.parametrize("kind", KINDS)
def test_length_preserved(kind):
    rng = np.random.default_rng(10)
    spec = TransformSpec(kind)
    for trial in range(50):
        x = _signal(rng)
        y = apply_transform(x, spec, np.random.default_rng([11, trial]))
        assert y.size == x.size


@pytest.mark.parametrize("kind", _STOCHASTIC)
def test_deterministic_replay(kind):
    rng = np.random.default_rng(12)
    spec = TransformSpec(kind)
    for trial in range(20):
        x = _signal(rng)
        a = apply_transform(x, spec, np.random.default_rng([13, trial]))
        b = apply_transform(x, spec, np.random.default_rng([13, trial]))
        np.testing.assert_array_equal(a, b)


def test_flip_is_involution():
    rng = np.random.default_rng(14)
    spec = TransformSpec("horizontal_flip")
    x = _signal(rng)
    y = apply_transform(apply_transform(x, spec, rng), spec, rng)
    np.testing.assert_array_equal(y, x)


def test_permutation_preserves_multiset():
    rng = np.random.default_rng(15)
    spec = TransformSpec("permutation")
    for trial in range(20):
        x = _signal(rng)
        y = apply_transform(x, spec, np.random.default_rng([16, trial]))
        np.testing.assert_array_equal(np.sort(y), np.sort(x))


def test_zero_sigma_noise_is_identity():
    rng = np.random.default_rng(17)
    x = _signal(rng)
    y = apply_transform(x, TransformSpec("gaussian_noise", {"sigma_ratio": 0.0}), rng)
    np.testing.assert_allclose(y, x, atol=1e-9)


def test_unit_warp_is_identity():
    rng = np.random.default_rng(18)
    x = _signal(rng)
    spec = TransformSpec("time_warp", {"scale_range": (1.0, 1.0)})
    y = apply_transform(x, spec, np.random.default_rng(19))
    np.testing.assert_allclose(y, x, atol=1e-9)


def test_full_keep_crop_is_identity():
    rng = np.random.default_rng(20)
    x = _signal(rng)
    spec = TransformSpec("crop_resize", {"num_segments": 1})
    y = apply_transform(x, spec, np.random.default_rng(21))
    np.testing.assert_allclose(y, x, atol=1e-9)


def test_average_filter_bounded():
    rng = np.random.default_rng(22)
    spec = TransformSpec("average_filter")
    for trial in range(20):
        x = _signal(rng)
        y = apply_transform(x, spec, np.random.default_rng([23, trial]))
        assert y.min() >= x.min() - 1e-12
        assert y.max() <= x.max() + 1e-12


def test_noise_scales_with_signal_std():
    rng = np.random.default_rng(24)
    x = 100.0 * _signal(rng)
    spec = TransformSpec("gaussian_noise", {"sigma_ratio": 0.1})
    y = apply_transform(x, spec, np.random.default_rng(25))
    added = y - x
    # Noise std tracks 0.1 * std(x), which is about 10 here.
    assert 5.0 < added.std() < 20.0


def test_split_points_spacing():
    for trial in range(200):
        rng = np.random.default_rng([26, trial])
        n = int(rng.integers(2, 9))
        cuts = _split_points(3072, n, rng)
        bounds = np.concatenate([[0], cuts, [3072]])
        widths = np.diff(bounds)
        assert widths.min() >= MIN_SEGMENT
        assert widths.sum() == 3072


def test_split_points_too_short():
    with pytest.raises(InputTooShort):
        _split_points(7, 4, np.random.default_rng(27))


def test_unknown_kind_rejected():
    with pytest.raises(ConfigError):
        TransformSpec("wavelet")


def test_non_1d_input_rejected():
    with pytest.raises(InputTooShort):
        apply_transform(np.zeros((4, 8)), TransformSpec("identity"), np.random.default_rng(0))


def test_make_view_pair_independent_and_deterministic():
    rng = np.random.default_rng(28)
    x = _signal(rng)
    t1 = TransformSpec("crop_resize")
    t2 = TransformSpec("permutation")
    a1, a2 = make_view_pair(x, t1, t2, RngStream(99), epoch_index=5)
    b1, b2 = make_view_pair(x, t1, t2, RngStream(99), epoch_index=5)
    np.testing.assert_array_equal(a1, b1)
    np.testing.assert_array_equal(a2, b2)
    # Different epoch index gives different draws.
    c1, _ = make_view_pair(x, t1, t2, RngStream(99), epoch_index=6)
    assert not np.array_equal(a1, c1)
    # The two views are distinct transforms of the same input.
    assert not np.array_equal(a1, a2)
