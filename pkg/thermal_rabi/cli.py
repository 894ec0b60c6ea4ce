"""
Standalone `thermal-rabi` entry point. Configures Django for the app and
dispatches `thermal-rabi <subcommand> ...` to the management commands.
"""
import os
import sys

import django
from django.conf import settings
from django.core.management import load_command_class

COMMANDS = {
    'dist': 'dist',
    'rabi': 'rabi',
    'rap-scan': 'rap_scan',
    'fit': 'fit',
    'map': 'map',
    'calibrate-c': 'calibrate_c',
}

STANDALONE_SETTINGS = {
    'INSTALLED_APPS': ['thermal_rabi'],
    'TEMPLATES': [{
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'APP_DIRS': True,
        'OPTIONS': {'autoescape': False},
    }],
    'USE_TZ': True,
    'LOGGING': {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'plain': {'format': '%(levelname)s %(name)s: %(message)s'},
        },
        'handlers': {
            'console': {'class': 'logging.StreamHandler', 'formatter': 'plain'},
        },
        'loggers': {
            'thermal_rabi': {'handlers': ['console'], 'level': 'INFO', 'propagate': False},
        },
    },
}

USAGE = 'usage: thermal-rabi {%s} --config <path> [--out <dir>] [--seed <n>] [--threads <n>]\n' % (
    ' | '.join(COMMANDS))


def configure():
    """
    Configure Django settings unless a project already did
    """
    if not settings.configured:
        settings.configure(**STANDALONE_SETTINGS)
        django.setup()


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    if len(argv) < 2 or argv[1] not in COMMANDS:
        sys.stderr.write(USAGE)
        return 2
    configure()
    name = COMMANDS[argv[1]]
    command = load_command_class('thermal_rabi', name)
    try:
        command.run_from_argv([os.path.basename(argv[0]), name] + argv[2:])
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else (0 if e.code is None else 1)
    return 0


if __name__ == '__main__':
    sys.exit(main())
