import numpy as np

from django.core.management.base import CommandError

from thermal_rabi.constants import MICROSECOND
from thermal_rabi.distribution import enumerate_distribution
from thermal_rabi.dynamics import square_pulse_effective, square_pulse_exact
from thermal_rabi.management.base import ThermalRabiCommand
from thermal_rabi.thermometry import synthesize_trace


class Command(ThermalRabiCommand):
    help = 'Compute thermal carrier Rabi oscillations from the exact and the model distribution'

    def add_command_arguments(self, parser):
        parser.add_argument('--t-max-us', type=float, default=50.0, help='Longest pulse duration in us')
        parser.add_argument('--points', type=int, default=501, help='Number of pulse durations')
        parser.add_argument('--shots', type=int, default=0,
                            help='Also write a synthetic trace with this many shots per point')

    def run(self, config, writer, **options):
        t_max, points = options['t_max_us'], options['points']
        if t_max < 0 or points < 1 or options['shots'] < 0:
            raise CommandError('--t-max-us, --points and --shots must be non-negative', returncode=2)
        if t_max == 0:
            points = 1
        config.require('omega0')
        durations = np.linspace(0.0, t_max, points) * MICROSECOND

        dist = enumerate_distribution(config.modes, config.omega0, config.truncation)
        eff = config.effective_distribution()
        p_exact = square_pulse_exact(dist, durations)
        p_effective = square_pulse_effective(eff, durations, config.quadrature_nodes)
        writer.write_csv(
            'rabi.csv', ['duration_us', 'p_exact', 'p_effective'],
            zip(durations / MICROSECOND, p_exact, p_effective),
            extra=[('b', eff.b), ('max_abs_difference', float(np.max(np.abs(p_exact - p_effective))))],
        )

        if options['shots']:
            seed = options['seed'] if options['seed'] is not None else 0
            trace = synthesize_trace(eff, durations, options['shots'], seed, config.quadrature_nodes)
            writer.write_csv(
                'rabi_trace.csv', ['duration_us', 'p_excited', 'std_err', 'n_shots'], trace.rows(),
                extra=[('seed', seed)],
            )
