"""
Robustness of thermally averaged RAP transfer against static amplitude
errors (scale y) and static detuning errors (delta').
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from thermal_rabi.conf import get_setting
from thermal_rabi.constants import KHZ, MHZ, TWO_PI
from thermal_rabi.distribution import EffectiveRabiDistribution
from thermal_rabi.dynamics import (
    PulseProgram, TransferResult, build_rap_pulse, thermal_average_curve, thermal_average_transfer,
)
from thermal_rabi.exceptions import DomainError

logger = logging.getLogger(__name__)

REFERENCE_CHIRP = TWO_PI * 100 * KHZ
PARASITIC_OFFSET = TWO_PI * 8 * MHZ
DEFAULT_Y_RANGE = (0.5, 1.5)
DEFAULT_GRID = (61, 61)


@dataclass(frozen=True, eq=False)
class RobustnessMap:
    """
    log10 infidelity on a (y, delta') grid. Rows follow `y_axis`, columns
    follow `delta_axis` (rad/s).
    """
    y_axis: np.ndarray
    delta_axis: np.ndarray
    values: np.ndarray
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for name in ('y_axis', 'delta_axis', 'values'):
            value = np.array(getattr(self, name), dtype=float)
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if self.values.shape != (self.y_axis.size, self.delta_axis.size):
            raise DomainError('map of shape %s does not match axes (%d, %d)' % (
                self.values.shape, self.y_axis.size, self.delta_axis.size))
        if np.any(self.values > 0):
            raise DomainError('log10 infidelities must be non-positive')

    @property
    def delta_axis_hz(self):
        return self.delta_axis / TWO_PI

    def delta_axis_chirp_units(self, reference=REFERENCE_CHIRP):
        """
        Detuning axis in units of the angular chirp range `reference`
        """
        return self.delta_axis / reference

    @property
    def minimum(self):
        return float(self.values.min())

    @property
    def argmin(self):
        """
        Return the (y, delta') grid point of lowest infidelity
        """
        row, column = np.unravel_index(int(np.argmin(self.values)), self.values.shape)
        return float(self.y_axis[row]), float(self.delta_axis[column])


def sweep_robustness(pulse: PulseProgram, eff: EffectiveRabiDistribution, y_range=DEFAULT_Y_RANGE,
                     delta_range=None, grid=DEFAULT_GRID, dx=None, reference_chirp=REFERENCE_CHIRP,
                     threads=None):
    """
    Thermally averaged infidelity 1 - p_e(t_end) on a uniform (y, delta')
    grid. Every delta' column is one batched propagation over all y and x.
    """
    if delta_range is None:
        delta_range = (-1.5 * reference_chirp, 1.5 * reference_chirp)
    if dx is None:
        dx = get_setting('DX')
    if threads is None:
        threads = get_setting('THREADS')
    n_y, n_delta = grid
    if n_y < 2 or n_delta < 2:
        raise DomainError('robustness grid needs at least 2 points per axis, got %r' % (grid,))
    if not 0 < y_range[0] < y_range[1]:
        raise DomainError('y range must be increasing and positive, got %r' % (y_range,))
    if not delta_range[0] < delta_range[1]:
        raise DomainError('detuning range must be increasing, got %r' % (delta_range,))

    ys = np.linspace(y_range[0], y_range[1], n_y)
    deltas = np.linspace(delta_range[0], delta_range[1], n_delta)
    logger.info('robustness sweep: %d x %d grid, b=%.4g, dx=%g', n_y, n_delta, eff.b, dx)

    def column(delta_prime):
        return thermal_average_curve(pulse, eff, ys, delta_prime, dx)

    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        populations = np.column_stack(list(executor.map(column, deltas)))

    infidelity = np.clip(1.0 - populations, get_setting('INFIDELITY_FLOOR'), 1.0)
    metadata = dict(pulse.metadata())
    metadata.update({
        'b': eff.b,
        'omega0_hz': eff.omega0 / TWO_PI,
        'dx': dx,
        'y_range': list(y_range),
        'delta_range_hz': [d / TWO_PI for d in delta_range],
        'grid': [n_y, n_delta],
        'reference_chirp_hz': reference_chirp / TWO_PI,
    })
    return RobustnessMap(ys, deltas, np.log10(infidelity), metadata)


def parasitic_transfer_check(pulse: PulseProgram, eff: EffectiveRabiDistribution, offset=PARASITIC_OFFSET,
                             dx=None) -> TransferResult:
    """
    Coherent transfer on a transition detuned by `offset` (rad/s) from the
    driven one, from the ground state
    """
    if not abs(offset) > 0:
        raise DomainError('parasitic offset must be non-zero')
    bandwidth = float(np.max(pulse.amplitudes) + np.max(np.abs(pulse.detunings)))
    if abs(offset) < 10 * bandwidth:
        logger.warning('parasitic offset %.4g rad/s is within 10x of the pulse bandwidth %.4g rad/s',
                       offset, bandwidth)
    result = thermal_average_transfer(pulse, eff, 1.0, offset, dx)
    logger.info('parasitic transfer at %.4g MHz offset: %.3g', offset / TWO_PI / MHZ, result.p_excited)
    return result


def amplitude_scan(eff: EffectiveRabiDistribution, amplitudes, tau_sigma, chirp_range, n_samples=50, dx=None):
    """
    Thermally averaged transfer for every calibrated amplitude in
    `amplitudes` (rad/s) at a fixed chirp range. The scan is a y-scan of a
    single pulse built at the largest amplitude.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    if amplitudes.size == 0:
        raise DomainError('amplitude list is empty')
    if np.any(amplitudes <= 0):
        raise DomainError('amplitudes must be positive')
    reference = float(amplitudes.max())
    pulse = build_rap_pulse(reference, tau_sigma, chirp_range, n_samples)
    return thermal_average_curve(pulse, eff, amplitudes / reference, 0.0, dx)


def low_infidelity_fraction(robustness_map: RobustnessMap, threshold=0.1):
    """
    Fraction of grid points whose infidelity is at most `threshold`
    """
    if not 0 < threshold < 1:
        raise DomainError('threshold must lie in (0, 1), got %r' % threshold)
    return float(np.mean(robustness_map.values <= math.log10(threshold)))
