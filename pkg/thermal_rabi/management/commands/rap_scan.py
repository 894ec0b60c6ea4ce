import numpy as np

from thermal_rabi.constants import KHZ, MICROSECOND, TWO_PI
from thermal_rabi.distribution import EffectiveRabiDistribution
from thermal_rabi.dynamics import build_rap_pulse
from thermal_rabi.exceptions import ConfigError
from thermal_rabi.management.base import ThermalRabiCommand
from thermal_rabi.robustness import amplitude_scan
from thermal_rabi.utils import format_float

# finer than the ~8 kHz period of the unchirped transfer at tau_sigma = 50 us
DEFAULT_AMPLITUDES_KHZ = tuple(np.arange(2.0, 402.0, 2.0))
DEFAULT_CHIRPS_KHZ = (0.0, 100.0)


class Command(ThermalRabiCommand):
    help = 'Thermally averaged RAP transfer versus calibrated Rabi frequency, one file per chirp range'

    def add_command_arguments(self, parser):
        parser.add_argument('--amplitudes-khz', type=float, nargs='*', default=None,
                            help='Calibrated Rabi frequencies Omega0_cal / 2 pi in kHz')
        parser.add_argument('--chirps-khz', type=float, nargs='*', default=None,
                            help='Chirp ranges r_c in kHz')

    def run(self, config, writer, **options):
        amplitudes = options['amplitudes_khz']
        chirps = options['chirps_khz']
        if amplitudes is None:
            amplitudes = DEFAULT_AMPLITUDES_KHZ
        if chirps is None:
            chirps = (config.chirp_range / KHZ,) if config.chirp_range is not None else DEFAULT_CHIRPS_KHZ
        if not len(amplitudes):
            raise ConfigError('--amplitudes-khz needs at least one value', {'amplitudes_khz': ['empty list']})
        if not len(chirps):
            raise ConfigError('--chirps-khz needs at least one value', {'chirps_khz': ['empty list']})
        if any(a <= 0 for a in amplitudes):
            raise ConfigError('amplitudes must be positive', {'amplitudes_khz': ['non-positive value']})
        config.require('tau_sigma')

        amplitudes = np.array(amplitudes, dtype=float)
        eff = EffectiveRabiDistribution.from_b(TWO_PI * amplitudes.max() * KHZ, config.thermal_b)
        for chirp in chirps:
            transfer = amplitude_scan(
                eff, TWO_PI * amplitudes * KHZ, config.tau_sigma, chirp * KHZ, config.n_samples, config.dx)
            writer.write_csv(
                'rap_scan_%skhz.csv' % format_float(chirp), ['omega0_cal_khz', 'p_transfer'],
                zip(amplitudes, transfer),
                extra=[('chirp_range_khz', chirp), ('b', eff.b), ('tau_sigma_us', config.tau_sigma / MICROSECOND)],
            )
            writer.write_pulse_csv(
                'pulse_%skhz.csv' % format_float(chirp),
                build_rap_pulse(eff.omega0, config.tau_sigma, chirp * KHZ, config.n_samples),
            )
