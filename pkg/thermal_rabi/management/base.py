import logging

from django.core.management.base import BaseCommand, CommandError

from thermal_rabi.config import load_run_config
from thermal_rabi.exceptions import ConfigError, ThermalRabiError
from thermal_rabi.writers import ResultWriter

VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO}


class ThermalRabiCommand(BaseCommand):

    """
    Common surface of every thermal_rabi command: the `--config`, `--out`,
    `--seed` and `--threads` flags, config loading and the exit codes
    (2 for an invalid config or input file, 1 for a numeric failure).
    Subclasses implement `run(config, writer, **options)`.
    """

    requires_system_checks = []

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1].replace('_', '-')

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Path of the JSON run configuration')
        parser.add_argument('--out', default=None, help='Output directory (default: config output_dir)')
        parser.add_argument('--seed', type=int, default=None, help='Seed of every random draw')
        parser.add_argument('--threads', type=int, default=None, help='Worker threads of parallel sweeps')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def run(self, config, writer, **options):
        raise NotImplementedError('subclasses of ThermalRabiCommand must provide a run() method')

    def handle(self, *args, **options):
        logging.getLogger('thermal_rabi').setLevel(VERBOSITY_LEVELS.get(options['verbosity'], logging.DEBUG))
        if options['threads'] is not None and options['threads'] < 1:
            raise CommandError('--threads must be at least 1', returncode=2)
        if options['seed'] is not None and options['seed'] < 0:
            raise CommandError('--seed must be non-negative', returncode=2)
        config_path = options.pop('config')
        try:
            config = load_run_config(config_path)
            if options['seed'] is None:
                options['seed'] = config.seed
            writer = ResultWriter(self.command_name, config.hash, options['out'] or config.output_dir)
            self.run(config, writer, **options)
        except ConfigError as e:
            raise CommandError(str(e), returncode=2)
        except ThermalRabiError as e:
            raise CommandError('%s: %s' % (e.__class__.__name__, e), returncode=1)
        self.stdout.write(self.style.SUCCESS('Successfully created %s outputs:' % self.command_name))
        for created_file in writer.created_files:
            self.stdout.write(self.style.SUCCESS('- ' + created_file))
