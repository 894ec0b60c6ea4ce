#!/usr/bin/env python
"""
Run the thermal_rabi test suite without a Django project:

    python runtests.py
    python runtests.py --exclude-tag slow
    python runtests.py thermal_rabi.tests.test_dynamics
"""
import argparse
import sys

import django
from django.conf import settings
from django.test.runner import DiscoverRunner

from thermal_rabi.cli import STANDALONE_SETTINGS


def build_parser():
    # newer DiscoverRunner versions define --failfast themselves and win the conflict
    parser = argparse.ArgumentParser(description='Run the thermal_rabi tests', conflict_handler='resolve')
    parser.add_argument('labels', nargs='*', default=['thermal_rabi.tests'])
    parser.add_argument('-v', '--verbosity', type=int, default=1, choices=[0, 1, 2, 3])
    parser.add_argument('--failfast', action='store_true')
    DiscoverRunner.add_arguments(parser)
    return parser


def main():
    options = vars(build_parser().parse_args())
    labels = options.pop('labels')

    settings.configure(LOGGING_CONFIG=None, **STANDALONE_SETTINGS)
    django.setup()
    failures = DiscoverRunner(**options).run_tests(labels)
    sys.exit(bool(failures))


if __name__ == '__main__':
    main()
