from thermal_rabi.distribution import calibrate_c
from thermal_rabi.exceptions import ConfigError
from thermal_rabi.management.base import ThermalRabiCommand


class Command(ThermalRabiCommand):
    help = 'Fit b over a temperature grid and regress T / T_D = c b^2'

    def run(self, config, writer, **options):
        if not config.temperature_grid:
            raise ConfigError('temperature_grid_td is required by calibrate-c',
                              {'temperature_grid_td': ['this field is required by the command']})
        calibration = calibrate_c(
            config.geometry, config.mode_frequencies, config.doppler_temperature, config.temperature_grid,
            mass_tolerance=config.truncation, sigma_ratio=config.sigma_ratio, grid_points=config.grid_points,
            threads=options['threads'],
        )
        writer.write_json('calibration.json', calibration.to_dict())
