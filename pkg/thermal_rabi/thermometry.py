"""
Thermometry from carrier Rabi oscillations, and the drive-amplitude to
Rabi-frequency power calibration.

The thermal fit runs in stages. The time tau_max of the first excitation
maximum is read off the trace and b is scanned with Omega0 tied to it by
Omega0 = G(b) / tau_max, where G(b) is the phase Omega0 t of the first
maximum of the averaged model curve. A profile over b, with Omega0 free in a
narrow window around that tie, tells whether the trace resolves any
dephasing and seeds the joint (Omega0, b) least-squares polish.
"""
import csv
import functools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np
from scipy import optimize, signal

from thermal_rabi.conf import get_setting
from thermal_rabi.constants import MICROSECOND
from thermal_rabi.distribution import (
    PEAK_FACTOR, EffectiveRabiDistribution, bounded_log_minimize, omega0_from_tau_max,
)
from thermal_rabi.dynamics import square_pulse_effective
from thermal_rabi.exceptions import (
    CalibrationRangeWarning, CalibrationRejectedError, DomainError, EnvelopeFlatWarning, FitError,
    NoMaximumError, TraceFormatError, UnderConstrainedError,
)

logger = logging.getLogger(__name__)

DEFAULT_SHOTS = 200
WEIGHT_CLAMP = (0.02, 0.98)
PEAK_WINDOW = 0.25
COUPLINGS = ('model', 'closed_form')
# b grid of the profile start and half-width of its log Omega0 window
PROFILE_RANGE = (1e-5, 1e-2)
PROFILE_POINTS = 16
PROFILE_SPAN = 0.08
FLAT_CHI2 = 4.0


@dataclass(frozen=True, eq=False)
class RabiTrace:
    """
    Excited population versus square-pulse duration (s), with standard
    errors and the number of shots behind every point
    """
    durations: np.ndarray
    p_excited: np.ndarray
    std_err: np.ndarray
    n_shots: np.ndarray

    def __post_init__(self):
        for name in ('durations', 'p_excited', 'std_err', 'n_shots'):
            value = np.array(getattr(self, name), dtype=float).ravel()
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if not self.durations.size == self.p_excited.size == self.std_err.size == self.n_shots.size:
            raise DomainError('trace columns must have the same length')
        if np.any(np.diff(self.durations) <= 0):
            raise DomainError('trace durations must be strictly increasing')
        if np.any(self.p_excited < 0) or np.any(self.p_excited > 1):
            raise DomainError('excitation probabilities must lie in [0, 1]')
        if np.any(self.std_err < 0):
            raise DomainError('standard errors must be non-negative')
        if np.any(self.n_shots <= 0):
            raise DomainError('shot numbers must be positive')

    def __len__(self):
        return self.durations.size

    @property
    def weights(self):
        """
        Inverse shot-noise variances n / (p (1 - p)) with p clamped away
        from 0 and 1
        """
        p = np.clip(self.p_excited, *WEIGHT_CLAMP)
        return self.n_shots / (p * (1 - p))

    def rescaled(self, factor):
        return RabiTrace(self.durations * factor, self.p_excited, self.std_err, self.n_shots)

    @classmethod
    def from_probabilities(cls, durations, p_excited, n_shots=DEFAULT_SHOTS):
        p_excited = np.asarray(p_excited, dtype=float)
        shots = np.full(p_excited.shape, float(n_shots))
        return cls(durations, p_excited, np.sqrt(p_excited * (1 - p_excited) / shots), shots)

    @classmethod
    def read_csv(cls, path):
        """
        Read `duration_us,p_excited[,std_err[,n_shots]]` rows after a header.
        Lines starting with `#` are skipped.
        """
        try:
            with open(path, newline='', encoding='utf-8') as trace_file:
                rows = list(csv.reader(trace_file))
        except (OSError, UnicodeDecodeError) as e:
            raise TraceFormatError('cannot read trace file %s: %s' % (path, e))
        durations, populations, errors, shots = [], [], [], []
        header_seen = False
        for line_number, row in enumerate(rows, start=1):
            if not row or row[0].lstrip().startswith('#'):
                continue
            if not header_seen:
                header_seen = True
                if row[0].strip() != 'duration_us':
                    raise TraceFormatError('expected header starting with duration_us', line_number)
                continue
            if not 2 <= len(row) <= 4:
                raise TraceFormatError('expected 2 to 4 columns, got %d' % len(row), line_number)
            try:
                values = [float(value) for value in row]
            except ValueError as e:
                raise TraceFormatError(str(e), line_number)
            p = values[1]
            n = values[3] if len(values) > 3 else DEFAULT_SHOTS
            if not 0 <= p <= 1 or n <= 0:
                raise TraceFormatError('p_excited outside [0, 1] or non-positive n_shots', line_number)
            durations.append(values[0] * MICROSECOND)
            populations.append(p)
            errors.append(values[2] if len(values) > 2 else math.sqrt(p * (1 - p) / n))
            shots.append(n)
        if not durations:
            raise TraceFormatError('trace holds no data rows')
        try:
            return cls(durations, populations, errors, shots)
        except DomainError as e:
            raise TraceFormatError(str(e))

    def rows(self):
        for duration, p, err, n in zip(self.durations, self.p_excited, self.std_err, self.n_shots):
            yield duration / MICROSECOND, p, err, int(n)


def synthesize_trace(eff: EffectiveRabiDistribution, durations, n_shots=DEFAULT_SHOTS, seed=None, n_nodes=None):
    """
    Model trace with binomial shot noise. `seed=None` returns the noiseless
    trace.
    """
    durations = np.asarray(durations, dtype=float)
    p = square_pulse_effective(eff, durations, n_nodes)
    if seed is not None:
        rng = np.random.default_rng(seed)
        p = rng.binomial(n_shots, np.clip(p, 0, 1)) / n_shots
    return RabiTrace.from_probabilities(durations, p, n_shots)


@dataclass(frozen=True)
class ThermometryResult:
    tau_max: float
    omega0: float
    b: float
    temperature_over_td: float
    sse: float
    uncertainties: Dict[str, float] = field(default_factory=dict)
    calibration_c: float = 0.0
    doppler_temperature: float = 0.0
    method: str = 'joint'

    def to_dict(self):
        return {
            'tau_max_s': self.tau_max,
            'omega0_rad_s': self.omega0,
            'omega0_hz': self.omega0 / (2 * math.pi),
            'b': self.b,
            'temperature_over_TD': self.temperature_over_td,
            'temperature_kelvin': self.temperature_over_td * self.doppler_temperature,
            'sse': self.sse,
            'method': self.method,
            'uncertainties': dict(self.uncertainties),
            'calibration': {'c': self.calibration_c, 'T_D_kelvin': self.doppler_temperature},
        }


def find_tau_max(trace: RabiTrace, prominence=None, window=0.0):
    """
    Time of the first local maximum. The maximum sample is refined by a
    parabola through its two neighbours or, with `window` > 0, by a weighted
    least-squares parabola over the samples within a relative half-width
    `window` of it.
    """
    if prominence is None:
        prominence = max(0.1, 4 * float(np.median(trace.std_err)))
    peaks, _ = signal.find_peaks(trace.p_excited, prominence=prominence)
    if peaks.size == 0:
        raise NoMaximumError('trace has no interior excitation maximum')
    i = int(peaks[0])
    if window > 0:
        t_peak = trace.durations[i]
        near = np.abs(trace.durations - t_peak) <= window * t_peak
        if np.count_nonzero(near) >= 5:
            offsets = trace.durations[near] / t_peak - 1
            a, slope, _ = np.polyfit(offsets, trace.p_excited[near], 2, w=np.sqrt(trace.weights[near]))
            if a < 0:
                vertex = t_peak * (1 - slope / (2 * a))
                return float(min(max(vertex, trace.durations[near][0]), trace.durations[near][-1]))
    (t0, t1, t2), (p0, p1, p2) = trace.durations[i - 1:i + 2], trace.p_excited[i - 1:i + 2]
    denominator = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (p1 - p0) + t1 * (p0 - p2) + t0 * (p2 - p1)) / denominator
    if a >= 0:
        return float(t1)
    b = (t2 ** 2 * (p0 - p1) + t1 ** 2 * (p2 - p0) + t0 ** 2 * (p1 - p2)) / denominator
    vertex = -b / (2 * a)
    return float(min(max(vertex, t0), t2))


def first_maximum_phase(b, n_nodes=None):
    """
    Phase Omega0 t of the first maximum of the averaged square-pulse curve
    of the model distribution. pi at b = 0, NaN when the curve peaks nowhere
    near pi (1 + 2^16 b^2).
    """
    if n_nodes is None:
        n_nodes = get_setting('QUADRATURE_NODES')
    if not b >= 0:
        raise DomainError('b must be non-negative, got %r' % b)
    return _first_maximum_phase(float(b), int(n_nodes))


@functools.lru_cache(maxsize=1024)
def _first_maximum_phase(b, n_nodes):
    if b == 0:
        return math.pi
    estimate = math.pi * (1 + PEAK_FACTOR * b * b)
    low, high = 0.5 * estimate, 1.5 * estimate
    eff = EffectiveRabiDistribution.from_b(1.0, b)
    result = optimize.minimize_scalar(
        lambda phase: -square_pulse_effective(eff, phase, n_nodes),
        bounds=(low, high),
        method='bounded',
        options={'xatol': 1e-9 * estimate, 'maxiter': 500},
    )
    if not result.success or min(result.x - low, high - result.x) < 1e-3 * estimate:
        return math.nan
    return float(result.x)


def _coupling_phase(coupling, n_nodes):
    if coupling == 'model':
        return lambda b: first_maximum_phase(b, n_nodes)
    if coupling == 'closed_form':
        return lambda b: omega0_from_tau_max(1.0, b)
    raise DomainError('unknown coupling %r, expected one of %s' % (coupling, ', '.join(COUPLINGS)))


def fit_thermal_rabi(trace: RabiTrace, calibration, polish=True, bracket=None, n_nodes=None,
                     coupling='model', peak_window=PEAK_WINDOW):
    """
    Fit the model to a carrier Rabi trace and convert b to a temperature
    with `calibration` (a TemperatureCalibration).

    `coupling` ties Omega0 to tau_max during the b scan: 'model' through the
    first maximum of the averaged model curve, 'closed_form' through
    Omega0 = (pi / tau_max)(1 + 2^16 b^2). The closed form puts the first
    maximum a few percent early once the envelope decays noticeably.
    """
    if bracket is None:
        bracket = get_setting('B_BRACKET')
    if n_nodes is None:
        n_nodes = get_setting('QUADRATURE_NODES')
    phase = _coupling_phase(coupling, n_nodes)
    tau_max = find_tau_max(trace, window=peak_window)
    if trace.durations[-1] < 3 * tau_max:
        raise UnderConstrainedError(
            'trace ends at %.3g s, before 3 tau_max = %.3g s; the dephasing envelope is not resolved'
            % (trace.durations[-1], 3 * tau_max))
    sigma = 1 / np.sqrt(trace.weights)
    dof = max(len(trace) - 2, 1)

    def residuals(omega0, b):
        model = square_pulse_effective(EffectiveRabiDistribution(omega0, b), trace.durations, n_nodes)
        return (trace.p_excited - model) / sigma

    def chi2(omega0, b):
        return float(np.sum(residuals(omega0, b) ** 2))

    def coupled_sse(b):
        g = phase(b)
        if not math.isfinite(g):
            return math.inf
        return chi2(g / tau_max, b)

    b, sse, at_lower, at_upper = bounded_log_minimize(coupled_sse, bracket)
    if at_upper:
        raise FitError('fitted b sits at the upper bracket boundary %r' % b)
    omega0 = phase(b) / tau_max

    flat = at_lower
    method = 'coupled'
    if polish:
        start, gain = _profile_start(chi2, phase, tau_max, b, bracket)
        flat = gain < FLAT_CHI2
        if not flat:
            omega0, b, sse, uncertainties = _polish(residuals, start, dof, calibration)
            if b >= bracket[1]:
                raise FitError('fitted b %r leaves the bracket %r' % (b, tuple(bracket)))
            flat = b <= bracket[0]
            method = 'joint'
    elif not flat:
        uncertainties = _coupled_uncertainties(coupled_sse, b, sse, dof, calibration)
        uncertainties['omega0'] = _coupling_slope(phase, b) / tau_max * uncertainties['b'] / b

    if flat:
        b = bracket[0]
        omega0 = phase(b) / tau_max
        sse = coupled_sse(b)
        method = 'flat'
        message = 'no dephasing resolved; b pinned to the lower bracket %r' % b
        logger.warning(message)
        warnings.warn(message, EnvelopeFlatWarning)
        uncertainties = {'b': math.nan, 'omega0': math.nan, 'temperature_over_TD': math.nan}

    ratio = calibration.temperature_over_td(b)
    logger.info('thermometry (%s): tau_max=%.4g s, Omega0=%.6g rad/s, b=%.4g, T/T_D=%.4g',
                method, tau_max, omega0, b, ratio)
    return ThermometryResult(
        tau_max=tau_max,
        omega0=omega0,
        b=b,
        temperature_over_td=ratio,
        sse=sse,
        uncertainties=uncertainties,
        calibration_c=calibration.c,
        doppler_temperature=calibration.doppler_temperature,
        method=method,
    )


def _profile_start(chi2, phase, tau_max, coupled_b, bracket):
    """
    chi^2 profiled over log Omega0 (within PROFILE_SPAN of the coupling) on a
    log grid of b plus the coupled estimate. Returns the best (Omega0, b)
    and its chi^2 gain over the smallest b of the grid.
    """
    low, high = max(bracket[0], PROFILE_RANGE[0]), min(bracket[1], PROFILE_RANGE[1])
    candidates = list(np.geomspace(low, high, PROFILE_POINTS))
    if low < coupled_b < high:
        candidates.append(coupled_b)
    profile = []
    for b in candidates:
        g = phase(b)
        if not math.isfinite(g):
            continue
        window = (g / tau_max * math.exp(-PROFILE_SPAN), g / tau_max * math.exp(PROFILE_SPAN))
        omega0, value, _, _ = bounded_log_minimize(lambda omega0: chi2(omega0, b), window, scan_points=33)
        profile.append((value, float(b), omega0))
    if not profile:
        raise FitError('the model curve has no first maximum anywhere on the b grid')
    value, b, omega0 = min(profile)
    logger.debug('profile start b=%.4g, Omega0=%.6g rad/s, chi2 gain %.3g', b, omega0, profile[0][0] - value)
    return (omega0, b), profile[0][0] - value


def _polish(residuals, start, dof, calibration):
    """
    Joint least squares over (log Omega0, log b). Uncertainties come from the
    Gauss-Newton curvature J^T J at the optimum.
    """
    omega0, b = start
    result = optimize.least_squares(
        lambda p: residuals(math.exp(p[0]), math.exp(p[1])),
        [math.log(omega0), math.log(b)],
        method='trf', x_scale=[1e-2, 1.0], xtol=1e-12, ftol=1e-12, gtol=1e-12,
    )
    if not result.success:
        raise FitError('joint (Omega0, b) fit failed: %s' % result.message)
    omega0, b = (math.exp(v) for v in result.x)
    sse = float(np.sum(result.fun ** 2))
    curvature = result.jac.T.dot(result.jac)
    if np.linalg.cond(curvature) > 1e14:
        raise UnderConstrainedError('Omega0 and b are not separately constrained by the trace')
    covariance = np.linalg.inv(curvature) * max(sse / dof, 1.0)
    sigma_log = np.sqrt(np.diag(covariance))
    return omega0, b, sse, {
        'omega0': omega0 * sigma_log[0],
        'b': b * sigma_log[1],
        'temperature_over_TD': 2 * calibration.temperature_over_td(b) * sigma_log[1],
    }


def _coupled_uncertainties(coupled_sse, b, sse, dof, calibration, step=1e-3):
    """
    Uncertainty of log b from the finite-difference curvature of the
    coupled SSE
    """
    log_b = math.log(b)
    upper = coupled_sse(math.exp(log_b + step))
    lower = coupled_sse(math.exp(log_b - step))
    curvature = (upper - 2 * sse + lower) / step ** 2
    if not curvature > 0:
        raise UnderConstrainedError('SSE surface is flat in b; the dephasing envelope does not constrain b')
    sigma_log = math.sqrt(2 / curvature * max(sse / dof, 1.0))
    return {'b': b * sigma_log, 'temperature_over_TD': 2 * calibration.temperature_over_td(b) * sigma_log}


def _coupling_slope(phase, b, step=1e-2):
    """
    |dG / db| of the coupling phase, by central differences in log b
    """
    upper, lower = phase(b * math.exp(step)), phase(b * math.exp(-step))
    if not math.isfinite(upper - lower):
        return math.nan
    return abs(upper - lower) / (2 * step * b)


@dataclass(frozen=True)
class PowerCalibration:
    """
    Cubic map from drive amplitude (device units) to bare Rabi frequency
    (rad/s), valid on `amplitude_range`
    """
    coefficients: Tuple[float, float, float, float]
    amplitude_range: Tuple[float, float]

    @property
    def polynomial(self):
        return np.polynomial.Polynomial(self.coefficients)

    def __call__(self, amplitude):
        low, high = self.amplitude_range
        values = np.asarray(amplitude, dtype=float)
        if np.any(values < low) or np.any(values > high):
            message = 'drive amplitude outside the calibrated range [%g, %g]; clamping' % (low, high)
            logger.warning(message)
            warnings.warn(message, CalibrationRangeWarning)
        result = self.polynomial(np.clip(values, low, high))
        if result.ndim == 0:
            return float(result)
        return result

    def amplitude_for(self, omega0):
        """
        Drive amplitude producing `omega0`, inverting the monotonic cubic
        """
        low, high = self.amplitude_range
        target = lambda a: self.polynomial(a) - omega0
        if target(low) * target(high) > 0:
            raise DomainError('Rabi frequency %r outside the calibrated range' % omega0)
        return optimize.brentq(target, low, high, xtol=1e-14 * max(abs(high), 1.0))


def fit_power_calibration(points):
    """
    Least-squares cubic through (amplitude, Omega0) points
    """
    if len(points) < 5:
        raise DomainError('a power calibration needs at least 5 points, got %d' % len(points))
    amplitudes, omegas = (np.asarray(column, dtype=float) for column in zip(*points))
    coefficients = np.polynomial.polynomial.polyfit(amplitudes, omegas, 3)
    calibration = PowerCalibration(tuple(float(c) for c in coefficients),
                                   (float(amplitudes.min()), float(amplitudes.max())))
    slope = calibration.polynomial.deriv()(np.linspace(*calibration.amplitude_range, 1001))
    if not (np.all(slope > 0) or np.all(slope < 0)):
        raise CalibrationRejectedError('fitted cubic is not monotonic over the calibrated amplitude range')
    return calibration
