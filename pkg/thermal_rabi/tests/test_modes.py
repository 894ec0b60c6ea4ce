import math

import numpy as np
from django.test import SimpleTestCase

from thermal_rabi.constants import MHZ, TWO_PI
from thermal_rabi.exceptions import DomainError, LambDickeWarning
from thermal_rabi.modes import (
    LaserGeometry, Mode, ModeSet, lamb_dicke, mean_occupation, reference_geometry, reference_mode_frequencies,
    thermal_cutoff, thermal_probability,
)
from thermal_rabi.tests.factories import LaserGeometryFactory, ModeFactory, ModeSetFactory


class LambDickeTests(SimpleTestCase):

    def test_reference_axial_factor(self):
        geometry = reference_geometry()
        eta = lamb_dicke(geometry, 0, TWO_PI * 1.35 * MHZ)
        self.assertAlmostEqual(eta, 0.059, delta=0.001)

    def test_reference_radial_factors(self):
        geometry = LaserGeometryFactory()
        frequencies = reference_mode_frequencies()
        self.assertAlmostEqual(lamb_dicke(geometry, 1, frequencies[1]), 0.031, places=9)
        self.assertAlmostEqual(lamb_dicke(geometry, 2, frequencies[2]), 0.028, places=9)

    def test_perpendicular_beam_does_not_couple(self):
        geometry = LaserGeometryFactory(projection_angles=(math.pi / 2,))
        self.assertAlmostEqual(lamb_dicke(geometry, 0, TWO_PI * MHZ), 0.0, places=12)

    def test_factor_scales_as_inverse_square_root_of_frequency(self):
        geometry = LaserGeometryFactory()
        ratio = lamb_dicke(geometry, 0, TWO_PI * MHZ) / lamb_dicke(geometry, 0, TWO_PI * 4 * MHZ)
        self.assertAlmostEqual(ratio, 2.0, places=12)

    def test_invalid_geometry(self):
        with self.assertRaises(DomainError):
            LaserGeometry(-1.0, 1e-25, (0.0,))
        with self.assertRaises(DomainError):
            LaserGeometryFactory(projection_angles=(2.0,))

    def test_invalid_frequency(self):
        with self.assertRaises(DomainError):
            lamb_dicke(reference_geometry(), 0, 0.0)


class OccupationTests(SimpleTestCase):

    def test_reference_occupations_at_twice_doppler(self):
        temperature = 2 * 0.55e-3
        occupations = [mean_occupation(temperature, omega) for omega in reference_mode_frequencies()]
        for value, expected in zip(occupations, (16.9, 9.5, 7.6)):
            self.assertAlmostEqual(value, expected, delta=0.2)

    def test_zero_temperature(self):
        self.assertEqual(mean_occupation(0.0, TWO_PI * MHZ), 0.0)

    def test_negative_temperature(self):
        with self.assertRaises(DomainError):
            mean_occupation(-1e-3, TWO_PI * MHZ)

    def test_thermal_distribution_is_normalized(self):
        n = np.arange(2001)
        p = thermal_probability(n, 10.0)
        self.assertAlmostEqual(float(p.sum()), 1.0, places=12)
        self.assertAlmostEqual(float(np.dot(n, p)), 10.0, places=6)

    def test_ground_state_limit(self):
        self.assertEqual(thermal_probability(0, 0.0), 1.0)
        self.assertEqual(thermal_probability(3, 0.0), 0.0)

    def test_negative_phonon_number(self):
        with self.assertRaises(DomainError):
            thermal_probability(np.array([0, -1]), 2.0)

    def test_cutoff_is_smallest_holding_mass(self):
        for n_bar in (0.5, 3.0, 17.0):
            q = n_bar / (n_bar + 1)
            cutoff = thermal_cutoff(n_bar, 0.9999)
            self.assertGreaterEqual(1 - q ** (cutoff + 1), 0.9999)
            self.assertLess(1 - q ** cutoff, 0.9999)
        self.assertEqual(thermal_cutoff(0.0, 0.9999), 0)


class ModeSetTests(SimpleTestCase):

    def test_from_geometry(self):
        modes = ModeSetFactory(temperature=1.1e-3)
        self.assertEqual(len(modes), 3)
        self.assertAlmostEqual(modes.lamb_dicke_factors[1], 0.031, places=9)
        self.assertAlmostEqual(modes[0].mean_occupation, 16.98, delta=0.05)
        self.assertTrue(all(mode.lamb_dicke_valid for mode in modes))

    def test_mismatched_lengths(self):
        with self.assertRaises(DomainError):
            ModeSet.from_geometry(reference_geometry(), reference_mode_frequencies()[:2], 1e-3)

    def test_empty_mode_set(self):
        with self.assertRaises(DomainError):
            ModeSet(())

    def test_lamb_dicke_regime_is_flagged(self):
        with self.assertLogs('thermal_rabi.modes', 'WARNING'):
            with self.assertWarns(LambDickeWarning):
                mode = ModeFactory(lamb_dicke=0.5, mean_occupation=10.0)
        self.assertFalse(mode.lamb_dicke_valid)

    def test_invalid_mode(self):
        with self.assertRaises(DomainError):
            Mode(TWO_PI * MHZ, 1.5, 1.0)
        with self.assertRaises(DomainError):
            Mode(-1.0, 0.05, 1.0)
