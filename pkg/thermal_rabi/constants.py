"""
Physical constants (CODATA, as shipped by `scipy.constants`) and unit
conversion factors. Everything inside the package works in SI units with
angular frequencies in rad/s.
"""
import math

from scipy import constants

HBAR = constants.hbar
K_B = constants.Boltzmann
ATOMIC_MASS = constants.atomic_mass

TWO_PI = 2 * math.pi

NANOMETER = constants.nano
MICROSECOND = constants.micro
MILLIKELVIN = constants.milli
KHZ = constants.kilo
MHZ = constants.mega
