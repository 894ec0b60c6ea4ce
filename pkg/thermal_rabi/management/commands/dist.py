import numpy as np

from thermal_rabi.constants import TWO_PI
from thermal_rabi.distribution import EffectiveRabiDistribution, enumerate_distribution, fit_b, smooth_distribution
from thermal_rabi.management.base import ThermalRabiCommand


class Command(ThermalRabiCommand):
    help = 'Enumerate the thermal Rabi-frequency distribution, smooth it and fit the model density'

    def run(self, config, writer, **options):
        config.require('omega0')
        modes = config.modes
        dist = enumerate_distribution(modes, config.omega0, config.truncation)
        smoothed = smooth_distribution(dist, config.sigma_ratio * config.omega0, config.grid_points)
        b, residual = fit_b(smoothed, config.omega0)
        model = EffectiveRabiDistribution.from_b(config.omega0, b)

        order = np.argsort(dist.omega, kind='stable')
        writer.write_csv(
            'dist_exact.csv', ['omega_hz', 'probability'],
            zip(dist.omega[order] / TWO_PI, dist.probability[order]),
            extra=[('truncation_deficit', dist.truncation_deficit)],
        )
        # densities per Hz
        writer.write_csv(
            'dist_smoothed.csv', ['omega_hz', 'density_per_hz'],
            zip(smoothed.grid / TWO_PI, smoothed.density * TWO_PI),
            extra=[('sigma_hz', smoothed.sigma / TWO_PI)],
        )
        support = (smoothed.grid > 0) & (smoothed.grid <= config.omega0)
        grid = smoothed.grid[support]
        writer.write_csv(
            'dist_model.csv', ['omega_hz', 'density_per_hz'],
            zip(grid / TWO_PI, model.pdf(grid) * TWO_PI),
            extra=[('b', b)],
        )
        writer.write_json('dist_fit.json', {
            'b': b,
            'relative_residual': residual,
            'omega0_hz': config.omega0 / TWO_PI,
            'peak_omega_hz': model.peak_omega / TWO_PI,
            'temperature_kelvin': config.thermal_temperature,
            'temperature_over_TD': config.thermal_temperature / config.doppler_temperature,
            'calibrated_temperature_over_TD': config.calibration.temperature_over_td(b),
            'sigma_hz': smoothed.sigma / TWO_PI,
            'n_points': len(dist),
            'truncation_deficit': dist.truncation_deficit,
            'mean_omega_hz': dist.mean / TWO_PI,
            'modes': [
                {
                    'frequency_hz': mode.angular_frequency / TWO_PI,
                    'lamb_dicke': mode.lamb_dicke,
                    'mean_occupation': mode.mean_occupation,
                    'lamb_dicke_valid': mode.lamb_dicke_valid,
                }
                for mode in modes
            ],
        })
