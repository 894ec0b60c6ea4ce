import django
from django.conf import settings

from thermal_rabi.cli import STANDALONE_SETTINGS


def pytest_configure(config):
    # same standalone configuration runtests.py uses
    if not settings.configured:
        settings.configure(LOGGING_CONFIG=None, **STANDALONE_SETTINGS)
        django.setup()
