import math
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase, tag

from thermal_rabi.constants import KHZ, MICROSECOND, TWO_PI
from thermal_rabi.distribution import PEAK_FACTOR, EffectiveRabiDistribution, TemperatureCalibration
from thermal_rabi.exceptions import (
    CalibrationRangeWarning, CalibrationRejectedError, DomainError, EnvelopeFlatWarning, NoMaximumError,
    TraceFormatError, UnderConstrainedError,
)
from thermal_rabi.thermometry import (
    RabiTrace, find_tau_max, first_maximum_phase, fit_power_calibration, fit_thermal_rabi, synthesize_trace,
)
from thermal_rabi.tests.factories import EffectiveRabiDistributionFactory

CALIBRATION = TemperatureCalibration(4.0e6, 0.55e-3)


class RabiTraceTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def write(self, content):
        path = os.path.join(self.directory.name, 'trace.csv')
        with open(path, 'w', encoding='utf-8') as trace_file:
            trace_file.write(content)
        return path

    def test_read_csv(self):
        path = self.write('# thermal-rabi 1.0.0\nduration_us,p_excited,std_err,n_shots\n0,0,0,100\n1.5,0.25,0.05,100\n')
        trace = RabiTrace.read_csv(path)
        self.assertEqual(len(trace), 2)
        self.assertAlmostEqual(trace.durations[1], 1.5 * MICROSECOND, places=15)
        self.assertEqual(trace.n_shots[0], 100)

    def test_read_csv_defaults(self):
        trace = RabiTrace.read_csv(self.write('duration_us,p_excited\n0,0\n1,0.5\n'))
        self.assertEqual(trace.n_shots[1], 200)
        self.assertAlmostEqual(trace.std_err[1], math.sqrt(0.25 / 200), places=12)

    def test_malformed_row_names_line(self):
        path = self.write('# comment\nduration_us,p_excited\n0.0,0.0\n0.1,abc\n')
        with self.assertRaises(TraceFormatError) as cm:
            RabiTrace.read_csv(path)
        self.assertEqual(cm.exception.line, 4)
        self.assertIn('line 4', str(cm.exception))

    def test_bad_header(self):
        with self.assertRaises(TraceFormatError) as cm:
            RabiTrace.read_csv(self.write('time,p\n0,0\n'))
        self.assertEqual(cm.exception.line, 1)

    def test_probability_out_of_range(self):
        with self.assertRaises(TraceFormatError):
            RabiTrace.read_csv(self.write('duration_us,p_excited\n0,0\n1,1.5\n'))

    def test_non_increasing_durations(self):
        with self.assertRaises(TraceFormatError):
            RabiTrace.read_csv(self.write('duration_us,p_excited\n1,0\n1,0.5\n'))

    def test_empty_trace(self):
        with self.assertRaises(TraceFormatError):
            RabiTrace.read_csv(self.write('duration_us,p_excited\n'))

    def test_missing_file(self):
        with self.assertRaises(TraceFormatError) as cm:
            RabiTrace.read_csv(os.path.join(self.directory.name, 'missing.csv'))
        self.assertIn('missing.csv', str(cm.exception))

    def test_undecodable_file(self):
        path = os.path.join(self.directory.name, 'trace.csv')
        with open(path, 'wb') as trace_file:
            trace_file.write(b'duration_us,p_excited\n\xff\xfe,0\n')
        with self.assertRaises(TraceFormatError):
            RabiTrace.read_csv(path)

    def test_validation(self):
        with self.assertRaises(DomainError):
            RabiTrace([0.0, 1.0], [0.0], [0.0], [1.0])
        with self.assertRaises(DomainError):
            RabiTrace.from_probabilities([0.0, 1.0], [0.0, 0.5], n_shots=0)

    def test_weights_are_clamped(self):
        trace = RabiTrace.from_probabilities([0.0, 1.0], [0.0, 0.5], n_shots=100)
        self.assertAlmostEqual(trace.weights[0], 100 / (0.02 * 0.98), places=9)
        self.assertAlmostEqual(trace.weights[1], 400.0, places=9)


class SynthesisTests(SimpleTestCase):

    def test_noiseless(self):
        eff = EffectiveRabiDistribution.from_b(TWO_PI * 100 * KHZ, 0.0)
        durations = np.linspace(0, 10, 11) * MICROSECOND
        trace = synthesize_trace(eff, durations)
        np.testing.assert_allclose(trace.p_excited, np.sin(eff.omega0 * durations / 2) ** 2, atol=1e-12)

    def test_seeded_noise_is_reproducible(self):
        eff = EffectiveRabiDistributionFactory()
        durations = np.linspace(0, 20, 41) * MICROSECOND
        first = synthesize_trace(eff, durations, n_shots=50, seed=7)
        second = synthesize_trace(eff, durations, n_shots=50, seed=7)
        np.testing.assert_array_equal(first.p_excited, second.p_excited)
        counts = first.p_excited * 50
        np.testing.assert_allclose(counts, np.round(counts), atol=1e-9)


class TauMaxTests(SimpleTestCase):

    def test_sample_on_maximum(self):
        eff = EffectiveRabiDistribution.from_b(TWO_PI * 100 * KHZ, 0.0)
        trace = synthesize_trace(eff, np.arange(200) * 0.1 * MICROSECOND)
        self.assertAlmostEqual(find_tau_max(trace) / MICROSECOND, 5.0, places=9)

    def test_vertex_between_samples(self):
        eff = EffectiveRabiDistribution.from_b(TWO_PI * 100 * KHZ, 0.0)
        trace = synthesize_trace(eff, (np.arange(200) * 0.1 + 0.03) * MICROSECOND)
        self.assertAlmostEqual(find_tau_max(trace) / MICROSECOND, 5.0, delta=0.01)

    def test_window_fit_between_samples(self):
        eff = EffectiveRabiDistribution.from_b(TWO_PI * 100 * KHZ, 0.0)
        trace = synthesize_trace(eff, (np.arange(200) * 0.1 + 0.03) * MICROSECOND)
        self.assertAlmostEqual(find_tau_max(trace, window=0.25) / MICROSECOND, 5.0, delta=0.01)

    def test_window_fit_averages_noise(self):
        eff = EffectiveRabiDistributionFactory()
        durations = np.linspace(0, 20, 201) * MICROSECOND
        expected = find_tau_max(synthesize_trace(eff, np.linspace(0, 20, 20001) * MICROSECOND))
        errors = [
            abs(find_tau_max(synthesize_trace(eff, durations, n_shots=200, seed=seed), window=0.25) / expected - 1)
            for seed in range(10)
        ]
        self.assertLess(float(np.median(errors)), 0.02)

    def test_no_maximum(self):
        eff = EffectiveRabiDistribution.from_b(TWO_PI * 100 * KHZ, 0.0)
        trace = synthesize_trace(eff, np.linspace(0, 1, 21) * MICROSECOND)
        with self.assertRaises(NoMaximumError):
            find_tau_max(trace)


class FirstMaximumPhaseTests(SimpleTestCase):

    def test_coherent_limit(self):
        self.assertEqual(first_maximum_phase(0.0), math.pi)

    def test_matches_first_maximum_of_the_model_curve(self):
        eff = EffectiveRabiDistributionFactory()
        trace = synthesize_trace(eff, np.linspace(0, 20, 20001) * MICROSECOND)
        self.assertAlmostEqual(first_maximum_phase(eff.b) / (eff.omega0 * find_tau_max(trace)), 1.0, delta=1e-4)

    def test_later_than_density_peak(self):
        # the averaged curve peaks a few percent after pi / Omega_peak
        ratio = first_maximum_phase(7.1e-4) / (math.pi * (1 + PEAK_FACTOR * 7.1e-4 ** 2))
        self.assertGreater(ratio, 1.03)
        self.assertLess(ratio, 1.06)

    def test_negative_b(self):
        with self.assertRaises(DomainError):
            first_maximum_phase(-1e-4)


class FitTests(SimpleTestCase):

    def reference_trace(self, seed=None):
        return synthesize_trace(EffectiveRabiDistributionFactory(), np.linspace(0, 50, 251) * MICROSECOND, seed=seed)

    def test_noiseless_round_trip(self):
        eff = EffectiveRabiDistributionFactory()
        result = fit_thermal_rabi(self.reference_trace(), CALIBRATION)
        self.assertEqual(result.method, 'joint')
        self.assertAlmostEqual(result.b / eff.b, 1.0, delta=0.01)
        self.assertAlmostEqual(result.omega0 / eff.omega0, 1.0, delta=1e-3)
        self.assertAlmostEqual(result.temperature_over_td / CALIBRATION.temperature_over_td(eff.b), 1.0, delta=0.02)
        self.assertGreater(result.uncertainties['b'], 0)

    def test_coupled_fit_without_polish(self):
        eff = EffectiveRabiDistributionFactory()
        result = fit_thermal_rabi(self.reference_trace(), CALIBRATION, polish=False, peak_window=0)
        self.assertEqual(result.method, 'coupled')
        self.assertAlmostEqual(result.b / eff.b, 1.0, delta=0.05)
        self.assertGreater(result.uncertainties['omega0'], 0)
        self.assertGreater(result.uncertainties['b'], 0)

    def test_closed_form_coupling_is_recovered_by_the_polish(self):
        eff = EffectiveRabiDistributionFactory()
        result = fit_thermal_rabi(self.reference_trace(), CALIBRATION, coupling='closed_form')
        self.assertEqual(result.method, 'joint')
        self.assertAlmostEqual(result.b / eff.b, 1.0, delta=0.01)

    def test_unknown_coupling(self):
        with self.assertRaises(DomainError):
            fit_thermal_rabi(self.reference_trace(), CALIBRATION, coupling='linear')

    def test_time_rescaling(self):
        trace = self.reference_trace(seed=5)
        result = fit_thermal_rabi(trace, CALIBRATION)
        stretched = fit_thermal_rabi(trace.rescaled(2.0), CALIBRATION)
        self.assertAlmostEqual(stretched.b / result.b, 1.0, delta=1e-4)
        self.assertAlmostEqual(stretched.omega0 / result.omega0, 0.5, delta=1e-4)
        self.assertAlmostEqual(stretched.tau_max / result.tau_max, 2.0, delta=1e-9)

    def test_doubling_shots_keeps_the_estimate(self):
        trace = self.reference_trace(seed=5)
        doubled = RabiTrace(trace.durations, trace.p_excited, trace.std_err / math.sqrt(2), trace.n_shots * 2)
        result, repeated = fit_thermal_rabi(trace, CALIBRATION), fit_thermal_rabi(doubled, CALIBRATION)
        self.assertAlmostEqual(repeated.b / result.b, 1.0, delta=1e-4)
        self.assertAlmostEqual(repeated.omega0 / result.omega0, 1.0, delta=1e-6)

    def test_coherent_trace_is_flagged(self):
        eff = EffectiveRabiDistribution.from_b(TWO_PI * 100 * KHZ, 0.0)
        trace = synthesize_trace(eff, np.arange(500) * 0.1 * MICROSECOND)
        with self.assertWarns(EnvelopeFlatWarning):
            result = fit_thermal_rabi(trace, CALIBRATION)
        self.assertEqual(result.method, 'flat')
        self.assertEqual(result.b, 1e-6)
        self.assertTrue(math.isnan(result.uncertainties['b']))
        self.assertAlmostEqual(result.omega0 / eff.omega0, 1.0, delta=1e-3)

    def test_short_trace(self):
        eff = EffectiveRabiDistributionFactory()
        trace = synthesize_trace(eff, np.linspace(0, 10, 101) * MICROSECOND)
        with self.assertRaises(UnderConstrainedError):
            fit_thermal_rabi(trace, CALIBRATION)

    def test_result_to_dict(self):
        data = fit_thermal_rabi(self.reference_trace(), CALIBRATION).to_dict()
        self.assertEqual(data['calibration'], {'c': 4.0e6, 'T_D_kelvin': 0.55e-3})
        self.assertEqual(data['method'], 'joint')
        self.assertAlmostEqual(data['temperature_kelvin'], data['temperature_over_TD'] * 0.55e-3, places=15)

    @tag('slow')
    def test_temperature_scatter_over_seeds(self):
        # 200 shots on 251 points bound the spread of T / T_D to a few percent, well above 0.02 T_D at 5 T_D
        durations = np.linspace(0, 50, 251) * MICROSECOND
        for ratio in (0.5, 1.0, 2.0, 3.0, 5.0):
            eff = EffectiveRabiDistribution.from_b(TWO_PI * 104.9 * KHZ, CALIBRATION.b_for_temperature(ratio))
            errors, reported = [], []
            for seed in range(20):
                trace = synthesize_trace(eff, durations, n_shots=200, seed=seed, n_nodes=256)
                result = fit_thermal_rabi(trace, CALIBRATION, n_nodes=256)
                self.assertEqual(result.method, 'joint')
                errors.append(abs(result.temperature_over_td - ratio))
                reported.append(result.uncertainties['temperature_over_TD'])
            median_error = float(np.median(errors))
            self.assertLessEqual(median_error / ratio, 0.2, (ratio, median_error))
            self.assertLessEqual(median_error, 2.5 * float(np.median(reported)), (ratio, median_error))


class PowerCalibrationTests(SimpleTestCase):

    def setUp(self):
        amplitudes = np.linspace(0.1, 1.0, 10)
        self.points = [(a, TWO_PI * KHZ * (300 * a - 40 * a ** 2 + 10 * a ** 3)) for a in amplitudes]

    def test_fit_and_invert(self):
        calibration = fit_power_calibration(self.points)
        amplitude, omega = self.points[4]
        self.assertAlmostEqual(calibration(amplitude) / omega, 1.0, places=9)
        self.assertAlmostEqual(calibration.amplitude_for(omega), amplitude, places=9)

    def test_out_of_range_is_clamped(self):
        calibration = fit_power_calibration(self.points)
        with self.assertWarns(CalibrationRangeWarning):
            value = calibration(2.0)
        self.assertAlmostEqual(value, calibration(1.0), places=6)

    def test_inverse_out_of_range(self):
        calibration = fit_power_calibration(self.points)
        with self.assertRaises(DomainError):
            calibration.amplitude_for(TWO_PI * 1000 * KHZ)

    def test_too_few_points(self):
        with self.assertRaises(DomainError):
            fit_power_calibration(self.points[:3])

    def test_non_monotonic(self):
        points = [(a, 1 - (a - 0.5) ** 2) for a in np.linspace(0, 1, 9)]
        with self.assertRaises(CalibrationRejectedError):
            fit_power_calibration(points)
