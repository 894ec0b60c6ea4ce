from django.conf import settings

DEFAULTS = {
    'TRUNCATION': 1e-4,
    'MAX_TUPLES': 10 ** 8,
    'SIGMA_RATIO': 1e-3,
    'GRID_POINTS': 2000,
    'DX': 0.01,
    'QUADRATURE_NODES': 1024,
    'B_BRACKET': (1e-6, 1e-1),
    'INFIDELITY_FLOOR': 1e-12,
    'OUTPUT_DIR': 'thermal_rabi_output',
    'THREADS': 1,
    'CALIBRATION_C': 4.0e6,
}


def get_setting(name):
    """
    Return `settings.THERMAL_RABI_<name>` or the built-in default.
    Works without configured Django settings, so the numerical modules
    stay usable as a plain library.
    """
    default = DEFAULTS[name]
    if not settings.configured:
        return default
    return getattr(settings, 'THERMAL_RABI_%s' % name, default)
