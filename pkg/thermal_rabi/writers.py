import csv
import json
import logging
import os

from django.template.loader import render_to_string

from thermal_rabi import VERSION
from thermal_rabi.conf import get_setting
from thermal_rabi.utils import format_float

logger = logging.getLogger(__name__)

PULSE_HEADER = ['t_start_s', 'duration_s', 'rabi_hz', 'detuning_hz']


class OutputPathMixin:

    """
    Mixin to compute path with the following structure :
    - root_directory_path:
        - <name>.csv
        - <name>.json
    """

    def __init__(self, out_dir=None):
        """
        Set the `root_dir` with the `out_dir` argument, the
        `THERMAL_RABI_OUTPUT_DIR` settings or default to `thermal_rabi_output`
        """
        self.root_dir = out_dir or get_setting('OUTPUT_DIR')
        super(OutputPathMixin, self).__init__()

    @property
    def root_directory_path(self):
        """
        Return the output directory full path
        """
        return os.path.abspath(self.root_dir)

    def file_path(self, filename):
        """
        Return the full path of `filename` inside the output directory
        """
        return os.path.join(self.root_directory_path, filename)


def _format_cell(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, int)):
        return str(value)
    return format_float(value)


class ResultWriter(OutputPathMixin):

    """
    Write the CSV and JSON outputs of one command. Every file starts with
    the tool version, the command name and the config hash, and the list of
    written paths is kept in `created_files`.
    """

    def __init__(self, command, config_hash, out_dir=None):
        self.command = command
        self.config_hash = config_hash
        self.created_files = []
        super(ResultWriter, self).__init__(out_dir)

    @property
    def meta(self):
        return {
            'version': VERSION,
            'command': self.command,
            'config_sha256': self.config_hash,
        }

    def bootstrap_out_dir(self):
        """
        Create the output directory if needed
        """
        if not os.path.exists(self.root_directory_path):
            os.makedirs(self.root_directory_path)

    def render_header(self, extra=()):
        """
        Render the `#` metadata lines put on top of every CSV file
        """
        context = dict(self.meta)
        context['extra'] = [(key, _format_cell(value)) for key, value in extra]
        return render_to_string('thermal_rabi/csv-header.txt', context).strip('\n') + '\n'

    def write_csv(self, filename, header, rows, extra=()):
        """
        Create `filename` holding the metadata lines, the mandatory header
        row and `rows`
        """
        self.bootstrap_out_dir()
        path = self.file_path(filename)
        with open(path, 'w', newline='', encoding='utf-8') as csv_file:
            csv_file.write(self.render_header(extra))
            writer = csv.writer(csv_file, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_cell(value) for value in row])
        logger.debug('wrote %s', path)
        self.created_files.append(path)
        return path

    def write_json(self, filename, payload):
        """
        Create `filename` holding `payload` and a `meta` block
        """
        self.bootstrap_out_dir()
        path = self.file_path(filename)
        document = dict(payload)
        document['meta'] = self.meta
        with open(path, 'w', encoding='utf-8') as json_file:
            json_file.write(json.dumps(document, sort_keys=True, indent=2))
            json_file.write('\n')
        logger.debug('wrote %s', path)
        self.created_files.append(path)
        return path

    def write_pulse_csv(self, filename, pulse):
        """
        Create `filename` holding one row per sample of `pulse` (a
        PulseProgram), its build parameters in the metadata lines
        """
        extra = [(key, value) for key, value in pulse.metadata().items() if value is not None]
        return self.write_csv(filename, PULSE_HEADER, pulse.rows(), extra=extra)
