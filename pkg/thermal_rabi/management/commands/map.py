from thermal_rabi.constants import TWO_PI
from thermal_rabi.distribution import EffectiveRabiDistribution
from thermal_rabi.management.base import ThermalRabiCommand
from thermal_rabi.robustness import low_infidelity_fraction, parasitic_transfer_check, sweep_robustness


class Command(ThermalRabiCommand):
    help = 'Map the thermally averaged RAP infidelity over amplitude and detuning errors'

    def run(self, config, writer, **options):
        pulse = config.rap_pulse()
        eff = EffectiveRabiDistribution.from_b(pulse.omega0_cal, config.thermal_b)
        robustness_map = sweep_robustness(
            pulse, eff, config.y_range, config.delta_range, config.grid, config.dx, threads=options['threads'])
        parasitic = parasitic_transfer_check(pulse, eff, config.parasitic_offset, config.dx)

        writer.write_pulse_csv('pulse.csv', pulse)
        writer.write_csv(
            'map.csv', ['y'] + list(robustness_map.delta_axis_hz),
            ([y] + list(row) for y, row in zip(robustness_map.y_axis, robustness_map.values)),
            extra=[('values', 'log10(1 - p_excited)'), ('columns', 'static detuning in Hz')],
        )
        best_y, best_delta = robustness_map.argmin
        writer.write_json('map.json', {
            'pulse': robustness_map.metadata,
            'y_axis': list(robustness_map.y_axis),
            'delta_axis_hz': list(robustness_map.delta_axis_hz),
            'delta_axis_chirp_units': list(robustness_map.delta_axis_chirp_units()),
            'min_log10_infidelity': robustness_map.minimum,
            'argmin': {'y': best_y, 'delta_hz': best_delta / TWO_PI},
            'low_infidelity_fraction': low_infidelity_fraction(robustness_map, 0.1),
            'parasitic': dict(parasitic.to_dict(), offset_hz=config.parasitic_offset / TWO_PI),
        })
