"""Tests for channel generation, message sets, noise, and received signals."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xchannel.channel import (
    ChannelRealization,
    MessageSet,
    NoiseModel,
    generate_channels,
    generate_messages,
    received_signal,
)


class TestGenerateChannels:
    def test_shape_and_dtype(self):
        ch = generate_channels(3, 4, 7, seed=0)
        assert ch.h.shape == (4, 3, 7)
        assert ch.h.dtype == np.complex128
        assert (ch.M, ch.N, ch.T) == (3, 4, 7)

    def test_deterministic_per_seed(self):
        a = generate_channels(3, 3, 6, seed=42)
        b = generate_channels(3, 3, 6, seed=42)
        np.testing.assert_array_equal(a.h, b.h)

    def test_seeds_differ(self):
        a = generate_channels(3, 3, 6, seed=1)
        b = generate_channels(3, 3, 6, seed=2)
        assert not np.array_equal(a.h, b.h)

    def test_no_zero_entries(self):
        # invertibility of every coefficient is relied on by the precoder
        for seed in range(20):
            ch = generate_channels(4, 4, 10, seed=seed)
            assert np.all(np.abs(ch.h) > 0)

    def test_arrays_write_protected(self):
        ch = generate_channels(2, 2, 3, seed=0)
        with pytest.raises(ValueError):
            ch.h[0, 0, 0] = 1.0

    @pytest.mark.parametrize("M,N,T", [(0, 3, 6), (3, 0, 6), (3, 3, 0), (-1, 2, 4)])
    def test_invalid_dims(self, M, N, T):
        with pytest.raises(ValueError):
            generate_channels(M, N, T, seed=0)

    def test_unit_variance_statistics(self):
        # 1e6 draws: E|h|^2 -> 1, Re/Im variance -> 1/2
        ch = generate_channels(200, 50, 100, seed=7)
        h = ch.h
        assert h.size == 10**6
        assert abs(np.mean(np.abs(h) ** 2) - 1.0) < 0.01
        assert abs(np.var(h.real) - 0.5) < 0.02 * 0.5
        assert abs(np.var(h.imag) - 0.5) < 0.02 * 0.5
        assert abs(np.mean(h)) < 0.005


class TestGenerateMessages:
    def test_shape(self):
        ms = generate_messages(3, 4, 2, seed=0)
        assert ms.w.shape == (4, 3, 2)
        assert (ms.M, ms.N, ms.k) == (3, 4, 2)

    def test_deterministic(self):
        a = generate_messages(2, 3, 1, seed=5)
        b = generate_messages(2, 3, 1, seed=5)
        np.testing.assert_array_equal(a.w, b.w)

    @pytest.mark.parametrize("k", [0, 3, -1])
    def test_invalid_k(self, k):
        with pytest.raises(ValueError):
            generate_messages(3, 3, k, seed=0)

    def test_unit_power(self):
        ms = generate_messages(100, 100, 2, seed=3)
        assert abs(np.mean(np.abs(ms.w) ** 2) - 1.0) < 0.02


class TestNoiseModel:
    def test_disabled_is_exact_zero(self):
        nm = NoiseModel(enabled=False)
        z = nm.sample_grid(3, 6)
        assert z.shape == (3, 6)
        assert np.all(z == 0)

    def test_enabled_deterministic(self):
        a = NoiseModel(enabled=True, variance=1.0, seed=9).sample_grid(3, 6)
        b = NoiseModel(enabled=True, variance=1.0, seed=9).sample_grid(3, 6)
        np.testing.assert_array_equal(a, b)
        assert not np.all(a == 0)

    def test_variance_scaling(self):
        a = NoiseModel(enabled=True, variance=1.0, seed=4).sample_grid(50, 400)
        b = NoiseModel(enabled=True, variance=4.0, seed=4).sample_grid(50, 400)
        np.testing.assert_allclose(b, 2.0 * a, rtol=1e-12)
        assert abs(np.mean(np.abs(a) ** 2) - 1.0) < 0.05

    def test_invalid_variance(self):
        with pytest.raises(ValueError):
            NoiseModel(enabled=True, variance=0.0).sample_grid(2, 2)
        with pytest.raises(ValueError):
            NoiseModel(enabled=True, variance=-1.0).sample_grid(2, 2)


class TestReceivedSignal:
    def _setup(self, M=3, N=3, T=6, seed=0):
        ch = generate_channels(M, N, T, seed=seed)
        rng = np.random.default_rng(seed + 100)
        x = rng.standard_normal((M, T)) + 1j * rng.standard_normal((M, T))
        return ch, x

    def test_matches_plain_dot(self):
        ch, x = self._setup()
        for t in range(ch.T):
            for i in range(ch.N):
                expect = sum(ch.h[i, j, t] * x[j, t] for j in range(ch.M))
                got = received_signal(ch, x[:, t], t, i)
                assert abs(got - expect) <= 1e-12 * max(1.0, abs(expect))

    def test_zero_input(self):
        ch, x = self._setup()
        assert received_signal(ch, np.zeros(ch.M), 2, 1) == 0

    def test_single_transmitter_recovers_coefficient(self):
        ch, _ = self._setup()
        x1 = np.zeros(ch.M, dtype=complex)
        x1[2] = 1.0
        assert received_signal(ch, x1, 4, 0) == ch.h[0, 2, 4]

    def test_noise_added(self):
        ch, x = self._setup()
        nm = NoiseModel(enabled=True, variance=1.0, seed=11)
        clean = received_signal(ch, x[:, 1], 1, 2)
        noisy = received_signal(ch, x[:, 1], 1, 2, noise=nm)
        sample = nm.sample_grid(ch.N, ch.T)[2, 1]
        assert abs((noisy - clean) - sample) <= 1e-12

    def test_bounds_checked(self):
        ch, x = self._setup()
        with pytest.raises(ValueError):
            received_signal(ch, x[:, 0], ch.T, 0)
        with pytest.raises(ValueError):
            received_signal(ch, x[:, 0], 0, ch.N)
        with pytest.raises(ValueError):
            received_signal(ch, x[:-1, 0], 0, 0)

    @settings(deadline=None, max_examples=30)
    @given(
        a=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
        b=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
        seed=st.integers(min_value=0, max_value=2**16),
    )
    def test_linearity(self, a, b, seed):
        ch, x = self._setup(seed=seed % 97)
        _, y = self._setup(seed=(seed % 97) + 1)
        mix = a * x[:, 3] + b * y[:, 3]
        lhs = received_signal(ch, mix, 3, 1)
        rhs = a * received_signal(ch, x[:, 3], 3, 1) + b * received_signal(
            ch, y[:, 3], 3, 1
        )
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


def test_realization_records_seed():
    ch = generate_channels(2, 2, 3, seed=123)
    assert isinstance(ch, ChannelRealization)
    assert ch.seed == 123
    ms = generate_messages(2, 2, 1, seed=45)
    assert isinstance(ms, MessageSet)
    assert ms.seed == 45
