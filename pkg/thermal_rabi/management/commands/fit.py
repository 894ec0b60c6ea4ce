import logging
import warnings

from thermal_rabi.management.base import ThermalRabiCommand
from thermal_rabi.thermometry import COUPLINGS, RabiTrace, fit_thermal_rabi

logger = logging.getLogger(__name__)


class Command(ThermalRabiCommand):
    help = 'Fit the thermal Rabi model to a measured carrier trace and report the temperature'

    def add_command_arguments(self, parser):
        parser.add_argument('trace_file', help='CSV with duration_us,p_excited[,std_err[,n_shots]] rows')
        parser.add_argument('--no-polish', action='store_true',
                            help='Keep Omega0 tied to the first maximum, skip the joint (Omega0, b) fit')
        parser.add_argument('--coupling', choices=COUPLINGS, default='model',
                            help='Tie between Omega0 and the first maximum during the b scan')

    def run(self, config, writer, **options):
        trace = RabiTrace.read_csv(options['trace_file'])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            result = fit_thermal_rabi(trace, config.calibration, polish=not options['no_polish'],
                                      n_nodes=config.quadrature_nodes, coupling=options['coupling'])
        payload = result.to_dict()
        payload['n_points'] = len(trace)
        payload['warnings'] = sorted({'%s: %s' % (w.category.__name__, w.message) for w in caught})
        writer.write_json('fit.json', payload)
