"""
Qubit time evolution.

Square pulses are averaged in closed form over either the exact or the
model Rabi-frequency distribution. Shaped pulses are piecewise constant, so
every sample is applied as the exact rotation generated by

    d/dt c_g = i/2 ((delta + delta') c_g + x y Omega c_e)
    d/dt c_e = i/2 (-(delta + delta') c_e + x y Omega c_g)

and the per-sample rotations are multiplied in a fixed pairwise order.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from thermal_rabi.conf import get_setting
from thermal_rabi.distribution import DiscreteRabiDistribution, EffectiveRabiDistribution
from thermal_rabi.exceptions import DomainError, NumericError

logger = logging.getLogger(__name__)

EXACT_CHUNK = 4 * 10 ** 6


@dataclass(frozen=True, eq=False)
class PulseProgram:
    """
    Piecewise-constant pulse: one (duration, Rabi amplitude, detuning)
    triple per sample, all in s and rad/s. The metadata records how the
    pulse was built and is None for hand-made pulses.
    """
    durations: np.ndarray
    amplitudes: np.ndarray
    detunings: np.ndarray
    omega0_cal: Optional[float] = None
    tau_sigma: Optional[float] = None
    chirp_range: Optional[float] = None

    def __post_init__(self):
        for name in ('durations', 'amplitudes', 'detunings'):
            value = np.array(getattr(self, name), dtype=float).ravel()
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if not self.durations.size == self.amplitudes.size == self.detunings.size:
            raise DomainError('durations, amplitudes and detunings must have the same length')
        if self.durations.size == 0:
            raise DomainError('a pulse needs at least one sample')
        if np.any(self.durations <= 0):
            raise DomainError('sample durations must be positive')
        if np.any(self.amplitudes < 0):
            raise DomainError('Rabi amplitudes must be non-negative')

    @property
    def n_samples(self):
        return self.durations.size

    @property
    def total_duration(self):
        return float(self.durations.sum())

    @property
    def start_times(self):
        """
        Sample start times, with t = 0 at the pulse center for RAP pulses
        """
        offset = -2 * self.tau_sigma if self.tau_sigma is not None else 0.0
        return offset + np.concatenate(([0.0], np.cumsum(self.durations)[:-1]))

    def rows(self):
        """
        (t_start_s, duration_s, rabi_hz, detuning_hz) for every sample
        """
        samples = zip(self.start_times, self.durations, self.amplitudes, self.detunings)
        for start, duration, amplitude, detuning in samples:
            yield float(start), float(duration), amplitude / (2 * math.pi), detuning / (2 * math.pi)

    def metadata(self):
        return {
            'omega0_cal_hz': None if self.omega0_cal is None else self.omega0_cal / (2 * math.pi),
            'tau_sigma_s': self.tau_sigma,
            'chirp_range_hz': self.chirp_range,
            'n_samples': self.n_samples,
        }


@dataclass(frozen=True)
class QubitAmplitudes:
    c_g: complex
    c_e: complex

    def __post_init__(self):
        object.__setattr__(self, 'c_g', complex(self.c_g))
        object.__setattr__(self, 'c_e', complex(self.c_e))
        if abs(self.norm - 1) > 1e-9:
            raise DomainError('qubit amplitudes must be normalized, got norm %r' % self.norm)

    @classmethod
    def ground(cls):
        return cls(1.0, 0.0)

    @property
    def norm(self):
        return abs(self.c_g) ** 2 + abs(self.c_e) ** 2

    @property
    def p_excited(self):
        return abs(self.c_e) ** 2

    def as_array(self):
        return np.array([self.c_g, self.c_e])


@dataclass(frozen=True)
class TransferResult:
    p_excited: float
    infidelity: float
    log10_infidelity: float

    @classmethod
    def from_probability(cls, p_excited, floor=None):
        if floor is None:
            floor = get_setting('INFIDELITY_FLOOR')
        p_excited = min(max(float(p_excited), 0.0), 1.0)
        infidelity = 1.0 - p_excited
        return cls(p_excited, infidelity, math.log10(max(infidelity, floor)))

    def to_dict(self):
        return {
            'p_excited': self.p_excited,
            'infidelity': self.infidelity,
            'log10_infidelity': self.log10_infidelity,
        }


def square_pulse_exact(dist: DiscreteRabiDistribution, t):
    """
    Excited population after a resonant square pulse of duration `t`,
    averaged over the enumerated distribution. Untracked truncation mass
    is counted as not transferred.
    """
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise DomainError('pulse durations must be non-negative')
    result = np.empty_like(times)
    step = max(EXACT_CHUNK // max(len(dist), 1), 1)
    total = dist.total
    for start in range(0, times.size, step):
        chunk = times[start:start + step]
        result[start:start + step] = 0.5 * (total - np.cos(np.outer(chunk, dist.omega)).dot(dist.probability))
    if np.ndim(t) == 0:
        return float(result[0])
    return result


def square_pulse_effective(eff: EffectiveRabiDistribution, t, n_nodes=None):
    """
    Excited population after a resonant square pulse of duration `t`,
    averaged over the model distribution by fixed-order quadrature
    """
    if n_nodes is None:
        n_nodes = get_setting('QUADRATURE_NODES')
    if n_nodes < 64:
        raise DomainError('at least 64 quadrature nodes are required, got %r' % n_nodes)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise DomainError('pulse durations must be non-negative')
    omega, weights = eff.quadrature(n_nodes)
    result = 0.5 * (1 - np.cos(np.outer(times, omega)).dot(weights))
    if np.ndim(t) == 0:
        return float(result[0])
    return result


def build_rap_pulse(omega0_cal, tau_sigma, chirp_range, n_samples=50):
    """
    Gaussian amplitude Omega0_cal exp(-t^2 / 2 tau^2) with linear detuning
    pi r_c t / tau, truncated at +-2 tau and sampled at the midpoints of
    `n_samples` equal steps
    """
    if n_samples < 2:
        raise DomainError('a RAP pulse needs at least 2 samples, got %r' % n_samples)
    if not tau_sigma > 0:
        raise DomainError('tau_sigma must be positive, got %r' % tau_sigma)
    if omega0_cal < 0:
        raise DomainError('omega0_cal must be non-negative, got %r' % omega0_cal)
    # odd integers keep the midpoint grid exactly antisymmetric
    midpoints = 2 * tau_sigma * (2 * np.arange(n_samples) + 1 - n_samples) / n_samples
    return PulseProgram(
        durations=np.full(n_samples, 4 * tau_sigma / n_samples),
        amplitudes=omega0_cal * np.exp(-midpoints ** 2 / (2 * tau_sigma ** 2)),
        detunings=math.pi * chirp_range * midpoints / tau_sigma,
        omega0_cal=float(omega0_cal),
        tau_sigma=float(tau_sigma),
        chirp_range=float(chirp_range),
    )


def sample_propagators(pulse: PulseProgram, scales, delta_prime=0.0):
    """
    Exact rotation of every sample for every drive scale factor, shape
    (n_samples, n_scales, 2, 2)
    """
    scales = np.atleast_1d(np.asarray(scales, dtype=float))
    dt = pulse.durations[:, None]
    drive = pulse.amplitudes[:, None] * scales[None, :]
    detuning = np.broadcast_to((pulse.detunings + delta_prime)[:, None], drive.shape)
    half_angle = 0.5 * np.hypot(drive, detuning) * dt
    cos = np.cos(half_angle)
    # sin(half_angle) / generalized Rabi frequency, finite at zero drive and detuning
    sin_over_rabi = 0.5 * dt * np.sinc(half_angle / np.pi)
    unitaries = np.empty(drive.shape + (2, 2), dtype=complex)
    unitaries[..., 0, 0] = cos + 1j * detuning * sin_over_rabi
    unitaries[..., 0, 1] = 1j * drive * sin_over_rabi
    unitaries[..., 1, 0] = unitaries[..., 0, 1]
    unitaries[..., 1, 1] = cos - 1j * detuning * sin_over_rabi
    return unitaries


def ordered_product(unitaries):
    """
    U_(n-1) ... U_1 U_0 along the first axis, by pairwise products in a
    fixed order
    """
    while unitaries.shape[0] > 1:
        if unitaries.shape[0] % 2:
            identity = np.broadcast_to(np.eye(2, dtype=complex), (1,) + unitaries.shape[1:])
            unitaries = np.concatenate([unitaries, identity])
        unitaries = np.matmul(unitaries[1::2], unitaries[0::2])
    return unitaries[0]


def excitation_probabilities(pulse: PulseProgram, scales, delta_prime=0.0):
    """
    Final excited population from the ground state for every drive scale
    factor x*y in `scales`
    """
    total = ordered_product(sample_propagators(pulse, scales, delta_prime))
    return np.abs(total[:, 1, 0]) ** 2


def _check_scales(x, y):
    if not 0 <= x <= 1:
        raise DomainError('reduction factor x must lie in [0, 1], got %r' % x)
    if not y > 0:
        raise DomainError('amplitude scale y must be positive, got %r' % y)


def propagate(pulse: PulseProgram, x, y, delta_prime=0.0, initial=None):
    """
    Propagate `initial` (default: ground state) through the pulse with drive
    x y Omega(t) and detuning delta(t) + delta'
    """
    _check_scales(x, y)
    if initial is None:
        initial = QubitAmplitudes.ground()
    total = ordered_product(sample_propagators(pulse, [x * y], delta_prime))[0]
    c_g, c_e = total.dot(initial.as_array())
    return QubitAmplitudes(c_g, c_e)


def propagate_ode(pulse: PulseProgram, x, y, delta_prime=0.0, initial=None, rtol=1e-10, atol=1e-12):
    """
    Same contract as `propagate`, integrated with an adaptive Runge-Kutta
    stepper sample by sample. Used to cross-check the exact propagator.
    """
    _check_scales(x, y)
    if initial is None:
        initial = QubitAmplitudes.ground()
    state = initial.as_array()
    for duration, amplitude, detuning in zip(pulse.durations, pulse.amplitudes, pulse.detunings):
        generator = 0.5j * np.array([
            [detuning + delta_prime, x * y * amplitude],
            [x * y * amplitude, -(detuning + delta_prime)],
        ])
        solution = integrate.solve_ivp(
            lambda t, c: generator.dot(c), (0.0, duration), state, method='DOP853', rtol=rtol, atol=atol)
        if not solution.success:
            raise NumericError('ODE integration failed: %s' % solution.message)
        state = solution.y[:, -1]
    state = state / math.sqrt(np.vdot(state, state).real)
    return QubitAmplitudes(state[0], state[1])


def thermal_average_curve(pulse: PulseProgram, eff: EffectiveRabiDistribution, ys, delta_prime=0.0, dx=None):
    """
    Thermally averaged excited population for every amplitude scale in `ys`
    """
    if dx is None:
        dx = get_setting('DX')
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(ys <= 0):
        raise DomainError('amplitude scales y must be positive')
    x, weights = eff.reduced_weights(dx)
    scales = np.outer(ys, x).ravel()
    populations = excitation_probabilities(pulse, scales, delta_prime).reshape(ys.size, x.size)
    return populations.dot(weights)


def thermal_average_transfer(pulse: PulseProgram, eff: EffectiveRabiDistribution, y=1.0, delta_prime=0.0, dx=None):
    """
    Transfer from the ground state averaged over the reduction factor x on
    a midpoint grid of step `dx`, weighted by the model density
    """
    p_excited = thermal_average_curve(pulse, eff, [y], delta_prime, dx)[0]
    return TransferResult.from_probability(p_excited)


def discrete_average_transfer(pulse: PulseProgram, dist: DiscreteRabiDistribution, y=1.0, delta_prime=0.0,
                              bin_width=1e-4):
    """
    Transfer averaged over the enumerated distribution. Reduction factors
    x = Omega_k / Omega0 are binned to `bin_width` and every bin is propagated
    once at its mass-weighted center. Untracked truncation mass counts as not
    transferred.
    """
    if not 0 < bin_width <= 0.01:
        raise DomainError('bin width must lie in (0, 0.01], got %r' % bin_width)
    if not y > 0:
        raise DomainError('amplitude scale y must be positive, got %r' % y)
    x = dist.omega / dist.omega0
    _bins, inverse = np.unique(np.floor(x / bin_width).astype(np.int64), return_inverse=True)
    mass = np.bincount(inverse, weights=dist.probability)
    centers = np.bincount(inverse, weights=dist.probability * x) / mass
    logger.debug('RAP average over %d points in %d bins', len(dist), mass.size)
    p_excited = excitation_probabilities(pulse, y * centers, delta_prime).dot(mass)
    return TransferResult.from_probability(p_excited)
