import math

import numpy as np
from django.test import SimpleTestCase, tag

from thermal_rabi.constants import KHZ, MHZ, MICROSECOND, TWO_PI
from thermal_rabi.distribution import EffectiveRabiDistribution
from thermal_rabi.dynamics import build_rap_pulse, propagate
from thermal_rabi.exceptions import DomainError
from thermal_rabi.robustness import (
    REFERENCE_CHIRP, RobustnessMap, amplitude_scan, low_infidelity_fraction, parasitic_transfer_check,
    sweep_robustness,
)
from thermal_rabi.tests.factories import EffectiveRabiDistributionFactory, RapPulseFactory


class RobustnessMapTests(SimpleTestCase):

    def test_shape_mismatch(self):
        with self.assertRaises(DomainError):
            RobustnessMap([0.9, 1.1], [0.0], np.zeros((1, 2)) - 1)

    def test_positive_values_are_rejected(self):
        with self.assertRaises(DomainError):
            RobustnessMap([0.9, 1.1], [0.0], [[-1.0], [0.5]])

    def test_axes_and_extrema(self):
        robustness_map = RobustnessMap(
            [0.9, 1.1], [-REFERENCE_CHIRP, REFERENCE_CHIRP], [[-1.0, -3.0], [-0.5, -2.0]])
        self.assertEqual(robustness_map.minimum, -3.0)
        self.assertEqual(robustness_map.argmin, (0.9, REFERENCE_CHIRP))
        np.testing.assert_allclose(robustness_map.delta_axis_hz, [-100 * KHZ, 100 * KHZ])
        np.testing.assert_allclose(robustness_map.delta_axis_chirp_units(), [-1.0, 1.0])
        with self.assertRaises(ValueError):
            robustness_map.values[0, 0] = 0.0

    def test_low_infidelity_fraction(self):
        robustness_map = RobustnessMap([0.9, 1.1], [0.0, 1.0], [[-0.5, -1.0], [-2.0, -0.1]])
        self.assertEqual(low_infidelity_fraction(robustness_map), 0.5)
        self.assertEqual(low_infidelity_fraction(robustness_map, threshold=0.5), 0.75)
        with self.assertRaises(DomainError):
            low_infidelity_fraction(robustness_map, threshold=1.0)


class SweepTests(SimpleTestCase):

    def test_small_sweep(self):
        pulse = RapPulseFactory(n_samples=20)
        robustness_map = sweep_robustness(pulse, EffectiveRabiDistributionFactory(), grid=(3, 4), dx=0.1)
        self.assertEqual(robustness_map.values.shape, (3, 4))
        self.assertTrue(np.all(robustness_map.values <= 0))
        self.assertEqual(robustness_map.y_axis[0], 0.5)
        self.assertEqual(robustness_map.y_axis[-1], 1.5)
        self.assertAlmostEqual(robustness_map.delta_axis[-1], 1.5 * REFERENCE_CHIRP, places=6)
        metadata = robustness_map.metadata
        self.assertEqual(metadata['grid'], [3, 4])
        self.assertEqual(metadata['n_samples'], 20)
        self.assertAlmostEqual(metadata['reference_chirp_hz'], 100 * KHZ, places=6)
        self.assertAlmostEqual(metadata['b'], 7.1e-4, places=12)

    def test_zero_chirp_map_is_symmetric_in_detuning(self):
        pulse = RapPulseFactory(chirp_range=0.0, omega0_cal=TWO_PI * 332 * KHZ, n_samples=20)
        robustness_map = sweep_robustness(
            pulse, EffectiveRabiDistributionFactory(), y_range=(0.8, 1.2), grid=(3, 5), dx=0.05)
        np.testing.assert_allclose(robustness_map.values, robustness_map.values[:, ::-1], atol=1e-6)

    def test_threads_do_not_change_the_map(self):
        pulse = RapPulseFactory(n_samples=20)
        eff = EffectiveRabiDistributionFactory()
        single = sweep_robustness(pulse, eff, grid=(3, 6), dx=0.1, threads=1)
        pooled = sweep_robustness(pulse, eff, grid=(3, 6), dx=0.1, threads=3)
        np.testing.assert_array_equal(single.values, pooled.values)

    def test_invalid_grids(self):
        pulse = RapPulseFactory(n_samples=10)
        eff = EffectiveRabiDistributionFactory()
        with self.assertRaises(DomainError):
            sweep_robustness(pulse, eff, grid=(1, 5))
        with self.assertRaises(DomainError):
            sweep_robustness(pulse, eff, y_range=(1.5, 0.5), grid=(2, 2))
        with self.assertRaises(DomainError):
            sweep_robustness(pulse, eff, delta_range=(1.0, -1.0), grid=(2, 2))


class ParasiticTransferTests(SimpleTestCase):

    def test_far_detuned_transition_is_untouched(self):
        result = parasitic_transfer_check(
            RapPulseFactory(), EffectiveRabiDistributionFactory(), offset=TWO_PI * 100e3 * MHZ, dx=0.1)
        self.assertLess(result.p_excited, 1e-8)

    def test_reference_offset_without_chirp(self):
        pulse = RapPulseFactory(chirp_range=0.0, omega0_cal=TWO_PI * 100 * KHZ)
        result = parasitic_transfer_check(pulse, EffectiveRabiDistributionFactory(), dx=0.1)
        self.assertLess(result.p_excited, 1e-4)

    def test_close_offset_is_logged(self):
        with self.assertLogs('thermal_rabi.robustness', 'WARNING'):
            parasitic_transfer_check(RapPulseFactory(), EffectiveRabiDistributionFactory(), TWO_PI * MHZ, dx=0.1)

    def test_zero_offset(self):
        with self.assertRaises(DomainError):
            parasitic_transfer_check(RapPulseFactory(), EffectiveRabiDistributionFactory(), 0.0)


class AmplitudeScanTests(SimpleTestCase):

    def test_coherent_scan_matches_single_trajectories(self):
        eff = EffectiveRabiDistribution.from_b(1.0, 0.0)
        amplitudes = TWO_PI * KHZ * np.array([50.0, 150.0, 221.0])
        scan = amplitude_scan(eff, amplitudes, 50 * MICROSECOND, 100 * KHZ, n_samples=30)
        for amplitude, value in zip(amplitudes, scan):
            pulse = build_rap_pulse(amplitude, 50 * MICROSECOND, 100 * KHZ, 30)
            self.assertAlmostEqual(value, propagate(pulse, 1.0, 1.0).p_excited, places=9)

    def test_invalid_amplitudes(self):
        eff = EffectiveRabiDistributionFactory()
        with self.assertRaises(DomainError):
            amplitude_scan(eff, [], 50 * MICROSECOND, 100 * KHZ)
        with self.assertRaises(DomainError):
            amplitude_scan(eff, [TWO_PI * KHZ, 0.0], 50 * MICROSECOND, 100 * KHZ)

    @tag('slow')
    def test_unchirped_pulse_oscillates_with_amplitude(self):
        eff = EffectiveRabiDistributionFactory()
        amplitudes = TWO_PI * KHZ * np.arange(1.0, 12.25, 0.25)
        scan = amplitude_scan(eff, amplitudes, 50 * MICROSECOND, 0.0, dx=0.05)
        first_peak = int(np.argmax(scan))
        self.assertGreater(scan[first_peak], 0.9)
        self.assertLess(scan[first_peak:].min(), 0.1)

    def test_chirped_pulse_transfers_at_calibrated_amplitude(self):
        eff = EffectiveRabiDistributionFactory()
        scan = amplitude_scan(eff, [TWO_PI * 221 * KHZ], 50 * MICROSECOND, 100 * KHZ, dx=0.05)
        self.assertGreater(scan[0], 0.85)
        self.assertTrue(math.isfinite(scan[0]))


class ReferencePulseTests(SimpleTestCase):
    """
    Transfer figures of the Gaussian RAP pulse truncated at +-2 tau_sigma,
    b = 7.1e-4, x grid step 0.01
    """

    def setUp(self):
        self.eff = EffectiveRabiDistributionFactory()

    def pulse(self, omega0_cal_khz, chirp_khz):
        return build_rap_pulse(TWO_PI * omega0_cal_khz * KHZ, 50 * MICROSECOND, chirp_khz * KHZ)

    def test_chirp_reduces_parasitic_transfer(self):
        # 8 MHz x 4 us sample steps is a whole number of cycles, the chirp breaks that commensurability
        transfers = [
            parasitic_transfer_check(self.pulse(221.0, chirp), self.eff, dx=0.01).p_excited
            for chirp in (0.0, 50.0, 100.0)
        ]
        self.assertTrue(np.all(np.diff(transfers) < 0), transfers)
        np.testing.assert_allclose(transfers, [2.0e-4, 9.1e-6, 4.5e-6], rtol=0.15)

    def test_parasitic_transfer_bound(self):
        self.assertLess(parasitic_transfer_check(self.pulse(221.0, 100.0), self.eff, dx=0.01).p_excited, 1e-4)
        unchirped = parasitic_transfer_check(self.pulse(332.0, 0.0), self.eff, dx=0.01).p_excited
        self.assertAlmostEqual(unchirped / 1.2e-3, 1.0, delta=0.15)

    @tag('slow')
    def test_map_minima(self):
        maps = {}
        for omega0_cal_khz, chirp_khz in ((332.0, 0.0), (221.0, 100.0), (332.0, 150.0)):
            pulse = self.pulse(omega0_cal_khz, chirp_khz)
            maps[chirp_khz] = sweep_robustness(pulse, self.eff, grid=(31, 31), dx=0.01)
        # the unchirped pulse area of ~40 full turns dephases over the thermal x spread
        self.assertAlmostEqual(maps[0.0].minimum, -0.320, delta=0.05)
        self.assertAlmostEqual(maps[100.0].minimum, -2.054, delta=0.05)
        self.assertAlmostEqual(maps[150.0].minimum, -2.069, delta=0.05)
        # scaling drive and chirp together by 1.5 is a time stretch with the same edge mixing
        ratio = 10 ** (maps[100.0].minimum - maps[150.0].minimum)
        self.assertGreaterEqual(ratio, 0.8)
        self.assertLessEqual(ratio, 1.3)
        self.assertEqual(maps[100.0].argmin[0], 0.5)
