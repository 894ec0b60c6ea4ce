"""
Rabi-frequency distributions of a thermally excited ion.

The exact distribution enumerates every tuple of phonon numbers of the
coupled modes; it is smoothed with a Gaussian kernel and fitted by the
one-parameter model density

    w_b(Omega) = N ((Omega0 - Omega) / Omega)^4 exp(-((Omega0 - Omega) / (b^2 Omega))^(1/4))

whose parameter b calibrates against the temperature as T / T_D = c b^2.

The model density is handled in the reduced variable
u = ((Omega0 - Omega) / (b^2 Omega))^(1/4), in which w_b dOmega becomes a
Gamma(20) density times (1 + b^2 u^4)^-2 (up to normalization).
"""
import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, optimize, special, stats

from thermal_rabi.conf import get_setting
from thermal_rabi.exceptions import DomainError, FitError, NumericError, ResourceError
from thermal_rabi.modes import ModeSet, thermal_cutoff, thermal_probability

logger = logging.getLogger(__name__)

PEAK_FACTOR = 2 ** 16
GAMMA_SHAPE = 20
U_MAX = float(stats.gamma.isf(1e-20, GAMMA_SHAPE))
NORMALIZATION_RTOL = 1e-8
SMOOTHING_BINS_PER_SIGMA = 16


def carrier_matrix_element(n, eta):
    """
    Carrier coupling exp(-eta^2 / 2) L_n(eta^2) of phonon number `n`
    """
    if n < 0:
        raise DomainError('phonon number must be non-negative, got %r' % n)
    if not 0 <= eta < 1:
        raise DomainError('Lamb-Dicke factor must lie in [0, 1), got %r' % eta)
    x = eta * eta
    previous, current = 0.0, 1.0
    for k in range(n):
        previous, current = current, ((2 * k + 1 - x) * current - k * previous) / (k + 1)
    return math.exp(-x / 2) * current


def carrier_matrix_elements(n_max, eta):
    """
    Carrier couplings for every phonon number 0..n_max in one pass of the
    Laguerre recurrence.
    """
    if not 0 <= eta < 1:
        raise DomainError('Lamb-Dicke factor must lie in [0, 1), got %r' % eta)
    x = eta * eta
    laguerre = np.empty(n_max + 1)
    laguerre[0] = 1.0
    if n_max >= 1:
        laguerre[1] = 1.0 - x
    for k in range(1, n_max):
        laguerre[k + 1] = ((2 * k + 1 - x) * laguerre[k] - k * laguerre[k - 1]) / (k + 1)
    return math.exp(-x / 2) * laguerre


@dataclass(frozen=True, eq=False)
class DiscreteRabiDistribution:
    """
    Weighted point set {(Omega_k, p_k)} of the exact multi-mode thermal
    distribution. The probabilities sum to 1 - truncation_deficit.
    """
    omega: np.ndarray
    probability: np.ndarray
    omega0: float
    truncation_deficit: float

    def __len__(self):
        return self.omega.size

    @property
    def total(self):
        return float(self.probability.sum())

    @property
    def mean(self):
        """
        First moment, normalized to the tracked probability mass
        """
        return float(np.dot(self.probability, self.omega) / self.total)


@dataclass(frozen=True, eq=False)
class SmoothedDistribution:
    grid: np.ndarray
    density: np.ndarray
    sigma: float

    @property
    def integral(self):
        return float(integrate.trapezoid(self.density, self.grid))


def enumerate_distribution(modes: ModeSet, omega0, mass_tolerance=None, max_tuples=None):
    """
    Enumerate all phonon-number tuples inside the truncated box. Each mode
    keeps occupations up to the smallest cutoff holding a thermal mass of
    (1 - mass_tolerance)^(1 / #modes).
    """
    if mass_tolerance is None:
        mass_tolerance = get_setting('TRUNCATION')
    if max_tuples is None:
        max_tuples = get_setting('MAX_TUPLES')
    if not 0 < mass_tolerance < 0.1:
        raise DomainError('mass tolerance must lie in (0, 0.1), got %r' % mass_tolerance)
    if not omega0 > 0:
        raise DomainError('omega0 must be positive, got %r' % omega0)

    per_mode_mass = (1 - mass_tolerance) ** (1.0 / len(modes))
    cutoffs = [thermal_cutoff(mode.mean_occupation, per_mode_mass) for mode in modes]
    box = functools.reduce(lambda a, b: a * b, [n + 1 for n in cutoffs], 1)
    if box > max_tuples:
        raise ResourceError(
            'truncated box holds %d tuples (cutoffs %s), above the cap of %d; '
            'use a larger mass tolerance' % (box, cutoffs, max_tuples))
    logger.debug('enumerating %d tuples, cutoffs %s', box, cutoffs)

    couplings = [np.abs(carrier_matrix_elements(n, mode.lamb_dicke)) for n, mode in zip(cutoffs, modes)]
    weights = [thermal_probability(np.arange(n + 1), mode.mean_occupation) for n, mode in zip(cutoffs, modes)]
    omega = omega0 * functools.reduce(np.multiply.outer, couplings).ravel()
    probability = functools.reduce(np.multiply.outer, weights).ravel()

    keep = (probability > 0) & (omega > 0)
    if not keep.all():
        omega, probability = omega[keep], probability[keep]
    deficit = max(1.0 - float(probability.sum()), 0.0)
    return DiscreteRabiDistribution(omega, probability, float(omega0), deficit)


def smooth_distribution(dist: DiscreteRabiDistribution, sigma=None, grid_points=None):
    """
    Convolve the point set with a normalized Gaussian of width `sigma` and
    sample it on a uniform grid over [min Omega_k - 5 sigma, Omega0].

    The points are first collected on a histogram of width sigma / 16,
    keeping the mean position of every bin, so the kernel sum runs over
    bins instead of the (possibly 10^7) individual points.
    """
    if sigma is None:
        sigma = get_setting('SIGMA_RATIO') * dist.omega0
    if grid_points is None:
        grid_points = get_setting('GRID_POINTS')
    if not sigma > 0:
        raise DomainError('sigma must be positive, got %r' % sigma)
    if grid_points < 100:
        raise DomainError('at least 100 grid points are required, got %r' % grid_points)

    low = float(dist.omega.min())
    grid = np.linspace(max(low - 5 * sigma, 0.0), dist.omega0, grid_points)

    width = sigma / SMOOTHING_BINS_PER_SIGMA
    index = np.floor((dist.omega - low) / width).astype(np.int64)
    mass = np.bincount(index, weights=dist.probability)
    moment = np.bincount(index, weights=dist.probability * dist.omega)
    occupied = mass > 0
    mass, centers = mass[occupied], moment[occupied] / mass[occupied]

    density = np.empty_like(grid)
    norm = 1.0 / math.sqrt(2 * math.pi * sigma ** 2)
    for start in range(0, grid.size, 256):
        chunk = grid[start:start + 256]
        kernel = np.exp(-(chunk[:, None] - centers[None, :]) ** 2 / (2 * sigma ** 2))
        density[start:start + 256] = norm * kernel.dot(mass)
    return SmoothedDistribution(grid, density, float(sigma))


@functools.lru_cache(maxsize=256)
def _reduced_integral(b):
    """
    J(b) = E[(1 + b^2 U^4)^-2] for U ~ Gamma(20), by adaptive quadrature
    """
    b2 = b * b
    log_norm = special.gammaln(GAMMA_SHAPE)

    def integrand(u):
        if u <= 0:
            return 0.0
        return math.exp((GAMMA_SHAPE - 1) * math.log(u) - u - log_norm - 2 * math.log1p(b2 * u ** 4))

    points = [GAMMA_SHAPE - 1.0]
    knee = 1 / math.sqrt(b)
    if knee < U_MAX:
        points.append(knee)
    value, abserr, info, *rest = integrate.quad(
        integrand, 0.0, U_MAX, points=sorted(points), epsabs=0.0, epsrel=1e-11, limit=500, full_output=True)
    if not value > 0 or abserr > 0.1 * NORMALIZATION_RTOL * value:
        raise NumericError(
            'normalization quadrature did not converge for b=%r: value=%r, error estimate=%r, '
            'evaluations=%d%s' % (b, value, abserr, info['neval'], ' (%s)' % rest[0] if rest else ''))
    return value


def normalize_pdf(omega0, b):
    """
    Normalization N making w_b integrate to one over [0, Omega0]:
    N = 1 / (4 Omega0 b^10 Gamma(20) J(b))
    """
    if not b > 0:
        raise DomainError('b must be positive, got %r' % b)
    if not omega0 > 0:
        raise DomainError('omega0 must be positive, got %r' % omega0)
    return math.exp(_log_normalization(omega0, b))


def _log_normalization(omega0, b):
    return -(math.log(4 * omega0) + 10 * math.log(b) + special.gammaln(GAMMA_SHAPE) + math.log(_reduced_integral(b)))


@functools.lru_cache(maxsize=64)
def _reduced_nodes(b, n_nodes):
    """
    Gauss-Legendre nodes in u on [0, U_MAX], returned as reduction factors
    x = Omega / Omega0 and weights summing to one
    """
    nodes, weights = special.roots_legendre(n_nodes)
    u = 0.5 * U_MAX * (nodes + 1)
    scale = 1 + b * b * u ** 4
    weights = 0.5 * U_MAX * weights * stats.gamma.pdf(u, GAMMA_SHAPE) / scale ** 2
    x = 1 / scale
    weights = weights / weights.sum()
    x.setflags(write=False)
    weights.setflags(write=False)
    return x, weights


@dataclass(frozen=True)
class EffectiveRabiDistribution:
    """
    The (Omega0, b, N) triple of the model density. b = 0 stands for the
    coherent limit, a delta distribution at Omega0. N is derived from
    (Omega0, b) when not given.
    """
    omega0: float
    b: float
    normalization: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError('omega0 must be positive, got %r' % self.omega0)
        if not self.b >= 0:
            raise DomainError('b must be non-negative, got %r' % self.b)
        if self.normalization is None:
            value = math.inf if self.b == 0 else normalize_pdf(self.omega0, self.b)
            object.__setattr__(self, 'normalization', value)

    @classmethod
    def from_b(cls, omega0, b):
        return cls(float(omega0), float(b))

    @property
    def is_coherent(self):
        return self.b == 0

    @property
    def peak_omega(self):
        return self.omega0 / (1 + PEAK_FACTOR * self.b ** 2)

    def log_pdf(self, omega):
        omega = np.asarray(omega, dtype=float)
        s = (self.omega0 - omega) / omega
        with np.errstate(divide='ignore', invalid='ignore'):
            value = math.log(self.normalization) + 4 * np.log(s) - (s / self.b ** 2) ** 0.25
        return np.where(s > 0, value, -np.inf)

    def pdf(self, omega):
        return effective_pdf(omega, self)

    def quadrature(self, n_nodes=None):
        """
        Angular frequencies and weights of the fixed-order quadrature used
        to average over the distribution
        """
        if n_nodes is None:
            n_nodes = get_setting('QUADRATURE_NODES')
        if self.is_coherent:
            return np.array([self.omega0]), np.array([1.0])
        x, weights = _reduced_nodes(self.b, int(n_nodes))
        return self.omega0 * x, weights

    def reduced_weights(self, dx):
        """
        Midpoint grid x = dx/2, 3dx/2, ... in (0, 1] with weights
        dx Omega0 w_b(x Omega0), renormalized to unit sum
        """
        if not 0 < dx <= 0.1:
            raise DomainError('dx must lie in (0, 0.1], got %r' % dx)
        if self.is_coherent:
            return np.array([1.0]), np.array([1.0])
        count = int(round(1 / dx))
        x = (np.arange(count) + 0.5) * dx
        x = x[x <= 1]
        weights = dx * self.omega0 * np.exp(self.log_pdf(x * self.omega0))
        total = weights.sum()
        if not total > 0 or not np.isfinite(total):
            raise NumericError('thermal weights vanish on the x grid (b=%r, dx=%r)' % (self.b, dx))
        return x, weights / total


def effective_pdf(omega, eff: EffectiveRabiDistribution):
    """
    Model density w_b at `omega` in (0, Omega0]; vanishes at Omega0
    """
    values = np.asarray(omega, dtype=float)
    if np.any(values <= 0) or np.any(values > eff.omega0):
        raise DomainError('omega must lie in (0, omega0]')
    if eff.is_coherent:
        result = np.where(values == eff.omega0, np.inf, 0.0)
    else:
        result = np.exp(eff.log_pdf(values))
    if result.ndim == 0:
        return float(result)
    return result


def omega0_from_tau_max(tau_max, b):
    """
    Bare Rabi frequency from the time of the first excitation maximum
    """
    if not tau_max > 0:
        raise DomainError('tau_max must be positive, got %r' % tau_max)
    if b < 0:
        raise DomainError('b must be non-negative, got %r' % b)
    return (math.pi / tau_max) * (1 + PEAK_FACTOR * b ** 2)


def bounded_log_minimize(objective, bracket, scan_points=26, xatol=1e-7):
    """
    Minimize `objective(b)` over log b inside `bracket`: coarse log-grid scan,
    then bounded Brent (golden section + parabolic steps) around the best
    scan point. Returns (b, value, at_lower, at_upper).
    """
    low, high = (math.log(v) for v in bracket)
    grid = np.linspace(low, high, scan_points)
    values = [objective(math.exp(g)) for g in grid]
    best = int(np.argmin(values))
    if best == 0:
        return bracket[0], values[0], True, False
    if best == scan_points - 1:
        return bracket[1], values[-1], False, True
    result = optimize.minimize_scalar(
        lambda g: objective(math.exp(g)),
        bounds=(grid[best - 1], grid[best + 1]),
        method='bounded',
        options={'xatol': xatol, 'maxiter': 500},
    )
    if not result.success:
        raise FitError('bounded minimization failed: %s' % result.message)
    edge = 10 * xatol
    return math.exp(result.x), float(result.fun), result.x - low < edge, high - result.x < edge


def fit_b(smoothed: SmoothedDistribution, omega0, bracket=None):
    """
    Least-squares fit of the model density to a smoothed distribution.
    Returns (b, relative rms residual).
    """
    if bracket is None:
        bracket = get_setting('B_BRACKET')
    support = (smoothed.grid > 0) & (smoothed.grid <= omega0)
    grid, target = smoothed.grid[support], smoothed.density[support]
    if grid.size < 100:
        raise DomainError('smoothed distribution covers the support with %d < 100 points' % grid.size)

    def sse(b):
        model = np.exp(EffectiveRabiDistribution.from_b(omega0, b).log_pdf(grid))
        return float(np.sum((model - target) ** 2))

    b, value, at_lower, at_upper = bounded_log_minimize(sse, bracket)
    if at_lower or at_upper:
        raise FitError('fitted b sits at the %s bracket boundary %r' % ('lower' if at_lower else 'upper', b))
    residual = math.sqrt(value / float(np.sum(target ** 2)))
    logger.debug('fitted b=%.6g (relative residual %.3g)', b, residual)
    return b, residual


@dataclass(frozen=True)
class TemperatureCalibration:
    """
    Linear calibration T / T_D = c b^2
    """
    c: float
    doppler_temperature: float
    fit_residual: float = 0.0
    r_squared: float = 1.0
    points: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError('calibration constant c must be positive, got %r' % self.c)

    def temperature_over_td(self, b):
        return self.c * b * b

    def temperature(self, b):
        return self.temperature_over_td(b) * self.doppler_temperature

    def b_for_temperature(self, ratio):
        return math.sqrt(ratio / self.c)

    def to_dict(self):
        return {
            'c': self.c,
            'T_D_kelvin': self.doppler_temperature,
            'residual': self.fit_residual,
            'r_squared': self.r_squared,
            'points': [{'T_over_TD': ratio, 'b': b} for ratio, b in self.points],
        }


def fit_temperature_point(geometry, mode_frequencies, temperature, omega0,
                          mass_tolerance=None, sigma_ratio=None, grid_points=None):
    """
    enumerate -> smooth -> fit_b at a single temperature
    """
    if sigma_ratio is None:
        sigma_ratio = get_setting('SIGMA_RATIO')
    modes = ModeSet.from_geometry(geometry, mode_frequencies, temperature)
    dist = enumerate_distribution(modes, omega0, mass_tolerance)
    smoothed = smooth_distribution(dist, sigma_ratio * omega0, grid_points)
    b, _residual = fit_b(smoothed, omega0)
    return b


def calibrate_c(geometry, mode_frequencies, doppler_temperature, temperature_grid, omega0=1.0,
                mass_tolerance=None, sigma_ratio=None, grid_points=None, threads=None):
    """
    Fit b at every temperature of `temperature_grid` (kelvin) and regress
    T / T_D against b^2 through the origin.
    """
    if threads is None:
        threads = get_setting('THREADS')
    if not doppler_temperature > 0:
        raise DomainError('Doppler temperature must be positive, got %r' % doppler_temperature)
    ratios = np.array(sorted(t / doppler_temperature for t in temperature_grid))
    if ratios.size < 5 or ratios[0] > 0.5 + 1e-9 or ratios[-1] < 5 - 1e-9:
        raise DomainError('temperature grid must hold >= 5 points spanning [0.5, 5] T_D')

    def fit_one(ratio):
        try:
            return fit_temperature_point(
                geometry, mode_frequencies, ratio * doppler_temperature, omega0,
                mass_tolerance, sigma_ratio, grid_points)
        except FitError as e:
            raise FitError('fit failed at T = %.4g T_D: %s' % (ratio, e))

    with ThreadPoolExecutor(max_workers=max(int(threads), 1)) as executor:
        bs = np.array(list(executor.map(fit_one, ratios)))

    b2 = bs ** 2
    c = float(np.dot(b2, ratios) / np.dot(b2, b2))
    residuals = ratios - c * b2
    ss_tot = float(np.sum((ratios - ratios.mean()) ** 2))
    r_squared = 1 - float(np.sum(residuals ** 2)) / ss_tot
    logger.info('calibration c=%.4g, R^2=%.6f over %d temperatures', c, r_squared, ratios.size)
    return TemperatureCalibration(
        c=c,
        doppler_temperature=float(doppler_temperature),
        fit_residual=float(np.sqrt(np.mean(residuals ** 2))),
        r_squared=r_squared,
        points=tuple((float(r), float(b)) for r, b in zip(ratios, bs)),
    )
