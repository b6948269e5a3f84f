import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpt_waveform.channel import FrequencyGrid, FrequencyResponse
from wpt_waveform.waveform import (
    MultisineWaveform,
    ReceivedSpectrum,
    received_spectrum,
    synthesize_received,
    transmit_power,
)

from conftest import random_response


class TestTransmitPower:
    def test_zero(self):
        assert transmit_power(MultisineWaveform(np.zeros((3, 2)), 0.0)) == 0.0

    def test_single_tone(self):
        assert transmit_power(MultisineWaveform([[np.sqrt(2)]], 0.0)) == pytest.approx(1.0)

    def test_uniform_baseline_normalization(self):
        w = MultisineWaveform(np.full((4, 2), 1 / np.sqrt(8)), 0.0)
        assert transmit_power(w) == pytest.approx(0.5)

    @given(st.floats(-10, 10), st.integers(0, 2**32 - 1))
    @settings(max_examples=30)
    def test_phase_invariant(self, shift, seed):
        rng = np.random.default_rng(seed)
        s = rng.uniform(0, 1, (3, 2))
        a = MultisineWaveform(s, rng.uniform(-np.pi, np.pi, s.shape))
        b = MultisineWaveform(s, a.phases + shift)
        assert transmit_power(a) == transmit_power(b)

    def test_negative_amplitude_rejected(self):
        with pytest.raises(ValueError):
            MultisineWaveform([[-1.0]], 0.0)


class TestReceivedSpectrum:
    def test_trivial(self):
        spec = received_spectrum(MultisineWaveform([[1.0]], 0.0), FrequencyResponse([[1.0]]))
        assert spec.amplitudes[0] == 1.0 and spec.phases[0] == 0.0

    def test_cancellation(self):
        spec = received_spectrum(MultisineWaveform([[1.0, 1.0]], 0.0), FrequencyResponse([[1.0, -1.0]]))
        assert spec.amplitudes[0] == pytest.approx(0.0, abs=1e-15)

    def test_coherent_combining(self, rng):
        h = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        w = MultisineWaveform([[1.0, 1.0]], [-np.angle(h)])
        spec = received_spectrum(w, FrequencyResponse([h]))
        direct = abs(np.sum(np.exp(-1j * np.angle(h)) * h))
        assert spec.amplitudes[0] == pytest.approx(direct, rel=1e-14)
        assert spec.amplitudes[0] == pytest.approx(np.abs(h).sum(), rel=1e-14)

    def test_invariant_against_direct_sum(self, rng):
        h = random_response(rng, 4, 3)
        w = MultisineWaveform(rng.uniform(0, 1, (4, 3)), rng.uniform(-np.pi, np.pi, (4, 3)))
        spec = received_spectrum(w, h)
        direct = [sum(w.amplitudes[n, m] * h.h[n, m] * np.exp(1j * w.phases[n, m]) for m in range(3))
                  for n in range(4)]
        np.testing.assert_allclose(spec.phasors, direct, rtol=1e-13)

    def test_linear_in_antenna_weights(self, rng):
        h = random_response(rng, 3, 2)
        a = MultisineWaveform(rng.uniform(0, 1, (3, 2)), rng.uniform(-3, 3, (3, 2)))
        only0 = MultisineWaveform(a.amplitudes * [1, 0], a.phases)
        only1 = MultisineWaveform(a.amplitudes * [0, 1], a.phases)
        total = received_spectrum(a, h).phasors
        parts = received_spectrum(only0, h).phasors + received_spectrum(only1, h).phasors
        np.testing.assert_allclose(total, parts, rtol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            received_spectrum(MultisineWaveform(np.ones((2, 2)), 0.0), FrequencyResponse(np.ones((2, 1))))


class TestSynthesis:
    grid = FrequencyGrid.harmonic(5, 1e6, 3)

    def test_zero(self):
        spec = ReceivedSpectrum(np.zeros(3), np.zeros(3), self.grid)
        assert np.all(synthesize_received(spec, np.linspace(0, 1e-6, 7)) == 0)

    def test_single_tone_peak(self):
        spec = ReceivedSpectrum([2.0], [0.0], FrequencyGrid.harmonic(1, 1e6, 1))
        assert synthesize_received(spec, 0.0) == 2.0

    def test_constructive_peak(self):
        spec = ReceivedSpectrum([0.7, 0.7], [0.0, 0.0], FrequencyGrid.harmonic(4, 1e6, 2))
        t = np.linspace(0, 1e-6, 4001)
        y = synthesize_received(spec, t)
        assert synthesize_received(spec, 0.0) == pytest.approx(1.4)
        assert y.max() == pytest.approx(1.4)

    def test_period_average_power(self, rng):
        for _ in range(10):
            x = rng.uniform(0, 1, 3)
            spec = ReceivedSpectrum(x, rng.uniform(-np.pi, np.pi, 3), self.grid)
            num = 16 * 7
            t = np.arange(num) * self.grid.period / num
            y = synthesize_received(spec, t)
            assert np.mean(y**2) == pytest.approx(0.5 * np.sum(x**2), rel=1e-9)

    def test_transmit_signal_shape(self):
        w = MultisineWaveform(np.ones((3, 2)), 0.0, self.grid)
        x = w.transmit_signal(np.zeros(5))
        assert x.shape == (5, 2)
        np.testing.assert_allclose(x, 3.0)


def test_waveform_dump_round_trip(rng):
    grid = FrequencyGrid.centered(5.18e9, 20e6, 4)
    w = MultisineWaveform(rng.uniform(0, 1, (4, 2)), rng.uniform(-np.pi, np.pi, (4, 2)), grid)
    back = MultisineWaveform.loads(w.dumps())
    np.testing.assert_array_equal(back.amplitudes, w.amplitudes)
    np.testing.assert_array_equal(back.phases, w.phases)
    assert back.grid == grid
