"""
Trap and laser geometry: Lamb-Dicke factors and thermal occupations of the
vibrational modes the qubit laser couples to.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from thermal_rabi.constants import ATOMIC_MASS, HBAR, K_B, MHZ, NANOMETER, TWO_PI
from thermal_rabi.exceptions import DomainError, LambDickeWarning

logger = logging.getLogger(__name__)

REFERENCE_WAVELENGTH = 729 * NANOMETER
REFERENCE_ION_MASS = 40 * ATOMIC_MASS
REFERENCE_MODE_FREQUENCIES_MHZ = (1.35, 2.4, 3.0)
REFERENCE_LAMB_DICKE = (0.059, 0.031, 0.028)
REFERENCE_AXIAL_ANGLE = math.pi / 4
REFERENCE_DOPPLER_TEMPERATURE = 0.55e-3


@dataclass(frozen=True)
class LaserGeometry:
    """
    Laser wavelength (m), ion mass (kg) and one projection angle (rad)
    between the beam and each oscillation direction.
    """
    wavelength: float
    ion_mass: float
    projection_angles: Tuple[float, ...]

    def __post_init__(self):
        if not self.wavelength > 0:
            raise DomainError('wavelength must be positive, got %r' % self.wavelength)
        if not self.ion_mass > 0:
            raise DomainError('ion_mass must be positive, got %r' % self.ion_mass)
        object.__setattr__(self, 'projection_angles', tuple(float(a) for a in self.projection_angles))
        for angle in self.projection_angles:
            if not 0 <= angle <= math.pi / 2 + 1e-12:
                raise DomainError('projection angles must lie in [0, pi/2], got %r' % angle)

    @property
    def wavenumber(self):
        return TWO_PI / self.wavelength


@dataclass(frozen=True)
class Mode:
    angular_frequency: float
    lamb_dicke: float
    mean_occupation: float

    def __post_init__(self):
        if not self.angular_frequency > 0:
            raise DomainError('mode frequency must be positive, got %r' % self.angular_frequency)
        if not 0 <= self.lamb_dicke < 1:
            raise DomainError('Lamb-Dicke factor must lie in [0, 1), got %r' % self.lamb_dicke)
        if not self.mean_occupation >= 0:
            raise DomainError('mean occupation must be non-negative, got %r' % self.mean_occupation)
        if not self.lamb_dicke_valid:
            message = 'eta*sqrt(n_bar) = %.3f >= 1, carrier approximation is not justified' % (
                self.lamb_dicke * math.sqrt(self.mean_occupation))
            logger.warning(message)
            warnings.warn(message, LambDickeWarning)

    @property
    def lamb_dicke_valid(self):
        """
        Return `True` when eta*sqrt(n_bar) < 1
        """
        return self.lamb_dicke * math.sqrt(self.mean_occupation) < 1


@dataclass(frozen=True)
class ModeSet:
    modes: Tuple[Mode, ...]

    def __post_init__(self):
        object.__setattr__(self, 'modes', tuple(self.modes))
        if not self.modes:
            raise DomainError('a ModeSet needs at least one mode')

    def __iter__(self):
        return iter(self.modes)

    def __len__(self):
        return len(self.modes)

    def __getitem__(self, index):
        return self.modes[index]

    @property
    def lamb_dicke_factors(self):
        return tuple(mode.lamb_dicke for mode in self.modes)

    @property
    def mean_occupations(self):
        return tuple(mode.mean_occupation for mode in self.modes)

    @classmethod
    def from_geometry(cls, geometry, angular_frequencies, temperature):
        """
        Build the mode set for a beam `geometry`, the mode angular
        frequencies and a common `temperature` of all modes.
        """
        if len(angular_frequencies) != len(geometry.projection_angles):
            raise DomainError('%d mode frequencies for %d projection angles' % (
                len(angular_frequencies), len(geometry.projection_angles)))
        return cls(tuple(
            Mode(
                angular_frequency=omega,
                lamb_dicke=lamb_dicke(geometry, index, omega),
                mean_occupation=mean_occupation(temperature, omega),
            )
            for index, omega in enumerate(angular_frequencies)
        ))


def lamb_dicke(geometry, mode_index, angular_frequency):
    """
    eta = cos(alpha) k sqrt(hbar / (2 m omega)) for mode `mode_index`
    """
    if not angular_frequency > 0:
        raise DomainError('angular frequency must be positive, got %r' % angular_frequency)
    alpha = geometry.projection_angles[mode_index]
    return math.cos(alpha) * geometry.wavenumber * math.sqrt(HBAR / (2 * geometry.ion_mass * angular_frequency))


def mean_occupation(temperature, angular_frequency):
    """
    Classical mean phonon number k_B T / (hbar omega)
    """
    if temperature < 0:
        raise DomainError('temperature must be non-negative, got %r' % temperature)
    if not angular_frequency > 0:
        raise DomainError('angular frequency must be positive, got %r' % angular_frequency)
    return K_B * temperature / (HBAR * angular_frequency)


def thermal_probability(n, n_bar):
    """
    Boltzmann occupation n_bar^n / (n_bar + 1)^(n + 1). Accepts scalars or
    integer arrays for `n`.
    """
    if n_bar < 0:
        raise DomainError('n_bar must be non-negative, got %r' % n_bar)
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError('phonon numbers must be non-negative')
    if n_bar == 0:
        result = np.where(n == 0, 1.0, 0.0)
    else:
        result = np.exp(n * math.log(n_bar / (n_bar + 1)) - math.log1p(n_bar))
    if result.ndim == 0:
        return float(result)
    return result


def thermal_cutoff(n_bar, mass):
    """
    Smallest N such that the occupations 0..N carry at least `mass` of
    the thermal distribution.
    """
    if n_bar == 0:
        return 0
    # cumulative mass through N is 1 - q^(N + 1)
    q = n_bar / (n_bar + 1)
    cutoff = max(int(math.ceil(math.log1p(-mass) / math.log(q))) - 1, 0)
    while 1 - q ** (cutoff + 1) < mass:
        cutoff += 1
    while cutoff > 0 and 1 - q ** cutoff >= mass:
        cutoff -= 1
    return cutoff


def reference_mode_frequencies():
    return tuple(TWO_PI * f * MHZ for f in REFERENCE_MODE_FREQUENCIES_MHZ)


def reference_geometry():
    """
    729 nm beam on a 40 u ion at 45 degrees to the axial mode. The radial
    projection angles are solved so that the radial Lamb-Dicke factors are
    0.031 and 0.028.
    """
    frequencies = reference_mode_frequencies()
    free = LaserGeometry(REFERENCE_WAVELENGTH, REFERENCE_ION_MASS, (0.0,) * len(frequencies))
    angles = [REFERENCE_AXIAL_ANGLE]
    for index, target in enumerate(REFERENCE_LAMB_DICKE[1:], start=1):
        angles.append(math.acos(target / lamb_dicke(free, index, frequencies[index])))
    return LaserGeometry(REFERENCE_WAVELENGTH, REFERENCE_ION_MASS, tuple(angles))
