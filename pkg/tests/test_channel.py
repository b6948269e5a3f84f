import cmath
import math

import numpy as np
import pytest

from wpt_waveform.channel import (
    ArrayGeometry,
    FrequencyGrid,
    MultipathChannel,
    MultipathTap,
    PowerDelayProfile,
    frequency_response,
    generate_channel,
    ula_phase_shift,
)
from scipy.constants import speed_of_light


def direct_response(channel, grid, array):
    """Plain-loop evaluation of sum_l alpha_l exp(j(-w tau + shift + xi))."""
    out = np.zeros((grid.count, array.num_antennas), dtype=complex)
    for n in range(grid.count):
        w = grid.base_frequency + n * grid.spacing
        lam = 2 * math.pi * speed_of_light / w
        for m in range(array.num_antennas):
            acc = 0j
            for tap in channel.taps:
                shift = 2 * math.pi * m * array.element_spacing / lam * math.cos(tap.departure_angle)
                acc += tap.gain * cmath.exp(1j * (-w * tap.delay + shift + tap.phase))
            out[n, m] = acc
    return out


class TestGenerateChannel:
    def test_unit_power_tap_variance(self):
        pdp = PowerDelayProfile((0.0,), (1.0,))
        alpha2 = [generate_channel(pdp, s).taps[0].gain ** 2 for s in range(10_000)]
        assert np.mean(alpha2) == pytest.approx(1.0, rel=0.05)

    def test_zero_power_tap_is_zero(self):
        pdp = PowerDelayProfile((0.0, 10e-9), (0.0, 1.0))
        for seed in range(20):
            assert generate_channel(pdp, seed).taps[0].gain == 0.0

    def test_deterministic(self):
        pdp = PowerDelayProfile.default()
        assert generate_channel(pdp, 7).dumps() == generate_channel(pdp, 7).dumps()
        assert generate_channel(pdp, 7).dumps() != generate_channel(pdp, 8).dumps()

    def test_any_integer_seed(self):
        pdp = PowerDelayProfile.default()
        assert len(generate_channel(pdp, -3)) == 18
        assert len(generate_channel(pdp, 2**70)) == 18

    def test_one_tap_per_entry(self):
        pdp = PowerDelayProfile.default()
        ch = generate_channel(pdp, 1)
        assert len(ch) == len(pdp)
        np.testing.assert_array_equal(ch.delays, pdp.delays)
        assert np.all((ch.departure_angles >= 0) & (ch.departure_angles < 2 * np.pi))

    def test_fixed_departure_angles(self):
        pdp = PowerDelayProfile((0.0, 1e-8), (1.0, 1.0), departure_angles=(0.3, None))
        ch = generate_channel(pdp, 5)
        assert ch.taps[0].departure_angle == 0.3
        assert ch.taps[1].departure_angle != 0.3

    def test_empty_profile_rejected(self):
        with pytest.raises(ValueError):
            PowerDelayProfile((), ())

    def test_total_power_parseval(self):
        pdp = PowerDelayProfile.default()
        totals = [np.sum(generate_channel(pdp, s).gains ** 2) for s in range(10_000)]
        assert np.mean(totals) == pytest.approx(pdp.total_power, rel=0.03)


class TestPowerDelayProfile:
    def test_default_shape(self):
        pdp = PowerDelayProfile.default()
        assert pdp.label == "model-B-substitute"
        assert len(pdp) == 18
        assert np.allclose(np.diff(pdp.delays), 10e-9)
        assert np.all(np.diff(pdp.powers) < 0)

    def test_normalized_to_link_gain(self):
        pdp = PowerDelayProfile.from_db([0, 50], [0, -3], rx_power_dbm=-12, tx_power_dbm=36)
        assert pdp.total_power == pytest.approx(10 ** (-4.8))
        assert pdp.powers[1] / pdp.powers[0] == pytest.approx(10 ** -0.3)

    @pytest.mark.parametrize(
        "delays, powers",
        [((0.0, 0.0), (1.0, 1.0)), ((1e-8, 0.0), (1.0, 1.0)), ((0.0,), (-1.0,)), ((0.0, 1e-8), (1.0,))],
    )
    def test_invalid(self, delays, powers):
        with pytest.raises(ValueError):
            PowerDelayProfile(delays, powers)

    def test_load_yaml(self, tmp_path):
        path = tmp_path / "pdp.yaml"
        path.write_text("delays_ns: [0, 10, 30]\npowers_db: [0, -3, -6]\nrx_power_dbm: -20\n")
        pdp = PowerDelayProfile.load(path)
        assert pdp.delays == pytest.approx((0.0, 1e-8, 3e-8))
        assert pdp.total_power == pytest.approx(10 ** (-5.6))

    def test_load_missing_field(self, tmp_path):
        path = tmp_path / "pdp.yaml"
        path.write_text("delays_ns: [0, 10]\n")
        with pytest.raises(ValueError, match="powers_db"):
            PowerDelayProfile.load(path)


def test_channel_dump_round_trip():
    ch = generate_channel(PowerDelayProfile.default(), 11)
    text = ch.dumps()
    assert text.startswith("# seed 11")
    back = MultipathChannel.loads(text)
    assert back == ch


class TestUlaPhaseShift:
    def test_first_antenna_is_reference(self):
        assert ula_phase_shift(1, 0.05, 1.1, 0.02) == 0.0

    def test_broadside(self):
        assert ula_phase_shift(2, 0.1, np.pi / 2, 0.05) == pytest.approx(0.0, abs=1e-15)

    def test_endfire_half_wavelength(self):
        assert ula_phase_shift(2, 0.1, 0.0, 0.05) == pytest.approx(np.pi)

    def test_zero_index_rejected(self):
        with pytest.raises(ValueError):
            ula_phase_shift(0, 0.1, 0.0, 0.05)


class TestFrequencyResponse:
    grid = FrequencyGrid.centered(5.18e9, 20e6, 8)

    def test_identity_channel(self):
        ch = MultipathChannel((MultipathTap(1.0, 0.0, 0.0, 0.7),))
        h = frequency_response(ch, self.grid, ArrayGeometry(1))
        np.testing.assert_allclose(h.h, np.ones((8, 1)), atol=1e-15)

    def test_destructive_interference(self):
        w = self.grid.frequencies[3]
        taps = (MultipathTap(1.0, 0.0, 0.0, 0.0), MultipathTap(1.0, np.pi / w, 0.0, 0.0))
        h = frequency_response(MultipathChannel(taps), self.grid, ArrayGeometry(1))
        assert abs(h.h[3, 0]) < 1e-9

    def test_matches_direct_summation(self, rng):
        for seed in range(5):
            taps = tuple(
                MultipathTap(rng.uniform(0, 1), rng.uniform(0, 200e-9), rng.uniform(-np.pi, np.pi),
                             rng.uniform(0, 2 * np.pi))
                for _ in range(3)
            )
            ch = MultipathChannel(taps)
            arr = ArrayGeometry(3)
            h = frequency_response(ch, self.grid, arr)
            ref = direct_response(ch, self.grid, arr)
            np.testing.assert_allclose(np.abs(h.h), np.abs(ref), rtol=1e-12)
            np.testing.assert_allclose(h.h, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())

    def test_single_tap_is_flat(self):
        ch = MultipathChannel((MultipathTap(0.3, 42e-9, 1.0, 2.0),))
        h = frequency_response(ch, self.grid, ArrayGeometry(1))
        np.testing.assert_allclose(h.magnitude, 0.3, rtol=1e-14)

    def test_linear_in_taps(self):
        pdp = PowerDelayProfile.default()
        a = generate_channel(pdp, 1).taps[:9]
        b = generate_channel(pdp, 2).taps[9:]
        arr = ArrayGeometry(4)
        both = frequency_response(MultipathChannel(a + b), self.grid, arr).h
        split = frequency_response(MultipathChannel(a), self.grid, arr).h + \
            frequency_response(MultipathChannel(b), self.grid, arr).h
        np.testing.assert_allclose(both, split, rtol=1e-12, atol=1e-15)

    def test_broadside_taps_identical_across_antennas(self):
        pdp = PowerDelayProfile.default()
        pdp = PowerDelayProfile(pdp.delays, pdp.powers, departure_angles=(np.pi / 2,) * len(pdp))
        h = frequency_response(generate_channel(pdp, 3), self.grid, ArrayGeometry(4)).h
        for m in range(1, 4):
            np.testing.assert_allclose(h[:, m], h[:, 0], rtol=1e-12)

    def test_polar_decomposition(self):
        h = frequency_response(generate_channel(PowerDelayProfile.default(), 4), self.grid, ArrayGeometry(2))
        assert np.all(h.magnitude >= 0)
        np.testing.assert_allclose(h.magnitude * np.exp(1j * h.phase), h.h, rtol=1e-14, atol=1e-20)


class TestFrequencyGrid:
    def test_centered(self):
        g = FrequencyGrid.centered(5.18e9, 20e6, 4)
        np.testing.assert_allclose(np.diff(g.frequencies_hz), 5e6)
        assert g.frequencies_hz.mean() == pytest.approx(5.18e9)

    def test_commensurate(self):
        assert FrequencyGrid.harmonic(7, 1e6, 3).is_commensurate()
        assert not FrequencyGrid(2 * np.pi * 7.5e6, 2 * np.pi * 1e6, 3).is_commensurate()

    @pytest.mark.parametrize("args", [(1.0, 0.0, 2), (1.0, 1.0, 0), (-1.0, 1.0, 2)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            FrequencyGrid(*args)
