"""Tests for utility functions."""

import math

import numpy as np
import pytest

from random_series_lab.utils import (
    canonical_json,
    coefficient_uniforms,
    compensated_sum,
    config_hash,
    dkw_half_width,
    format_float,
    make_stream,
    stream_key,
    wilson_half_width,
    wilson_interval,
)


class TestStreams:
    """Tests for seeded counter-based streams."""

    def test_stream_key_is_deterministic(self):
        """Test that the same path yields the same key."""
        np.testing.assert_array_equal(stream_key(7, 1, 2), stream_key(7, 1, 2))

    def test_stream_key_depends_on_path(self):
        """Test that different ids give different keys."""
        assert not np.array_equal(stream_key(7, 1), stream_key(7, 2))
        assert not np.array_equal(stream_key(7, 1), stream_key(8, 1))

    def test_make_stream_reproducible(self):
        """Test that two generators on one path agree."""
        a = make_stream(3, 4).random(10)
        b = make_stream(3, 4).random(10)

        np.testing.assert_array_equal(a, b)

    def test_coefficient_uniforms_shape(self):
        """Test the (count, 2) layout and range."""
        u = coefficient_uniforms(1, 0, 50)

        assert u.shape == (50, 2)
        assert np.all((u >= 0.0) & (u < 1.0))

    def test_coefficient_uniforms_empty(self):
        """Test that a zero count gives an empty array."""
        assert coefficient_uniforms(1, 0, 0).shape == (0, 2)

    @pytest.mark.parametrize("start", [1, 2, 3, 17])
    def test_coefficient_uniforms_random_access(self, start: int):
        """Test that coefficient k does not depend on where generation starts."""
        full = coefficient_uniforms(11, 5, 40)
        tail = coefficient_uniforms(11, 5, 40 - start, start=start)

        np.testing.assert_array_equal(full[start:], tail)

    def test_coefficient_uniforms_prefix_stable(self):
        """Test that a longer draw extends a shorter one."""
        short = coefficient_uniforms(2, 9, 10)
        long = coefficient_uniforms(2, 9, 100)

        np.testing.assert_array_equal(long[:10], short)

    def test_replicates_independent(self):
        """Test that replicates use distinct streams."""
        assert not np.array_equal(coefficient_uniforms(2, 0, 5), coefficient_uniforms(2, 1, 5))


class TestWilson:
    """Tests for the Wilson score interval."""

    def test_contains_point_estimate(self):
        """Test that the interval brackets successes/n."""
        low, high = wilson_interval(30, 100)

        assert low < 0.3 < high

    def test_zero_successes(self):
        """Test that zero successes keep a positive upper bound."""
        low, high = wilson_interval(0, 100)

        assert low == 0.0
        assert 0.0 < high < 0.1

    def test_all_successes(self):
        """Test the interval at full success."""
        low, high = wilson_interval(100, 100)

        assert high == 1.0
        assert low > 0.9

    def test_empty_sample(self):
        """Test that n=0 gives the trivial interval."""
        assert wilson_interval(0, 0) == (0.0, 1.0)

    def test_higher_level_is_wider(self):
        """Test that 99% intervals are wider than 95% ones."""
        assert wilson_half_width(40, 200, 0.99) > wilson_half_width(40, 200, 0.95)

    def test_shrinks_with_n(self):
        """Test that more trials narrow the interval."""
        assert wilson_half_width(500, 1000) < wilson_half_width(50, 100)

    def test_dkw_band(self):
        """Test the DKW half-width at 99% on 10⁴ samples."""
        assert dkw_half_width(10_000) == pytest.approx(math.sqrt(math.log(200.0) / 20_000))
        assert dkw_half_width(10_000, 0.95) < dkw_half_width(10_000, 0.99)
        assert dkw_half_width(0) == 1.0


class TestBookkeeping:
    """Tests for sums, hashing and float formatting."""

    def test_compensated_sum_order_independent(self):
        """Test that reordering does not change the sum."""
        values = [1e16, 1.0, -1e16, 1.0]

        assert compensated_sum(values) == 2.0
        assert compensated_sum(reversed(values)) == 2.0

    def test_canonical_json_sorted(self):
        """Test that key order does not affect the canonical form."""
        assert canonical_json({"b": 1, "a": 2}) == canonical_json({"a": 2, "b": 1})
        assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'

    def test_config_hash_stable(self):
        """Test that equal configs hash equal and different ones do not."""
        assert config_hash({"seed": 1}) == config_hash({"seed": 1})
        assert config_hash({"seed": 1}) != config_hash({"seed": 2})
        assert len(config_hash({})) == 64

    def test_format_float_round_trips(self):
        """Test the shortest round-trip representation."""
        value = 0.1 + 0.2

        assert float(format_float(value)) == value
        assert format_float(math.pi) == "3.141592653589793"
