"""
Run configuration: a versioned JSON document in boundary units (nm, u, deg,
MHz, kHz, us, mK), validated field by field with a Django form and
converted once to SI units and rad/s.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from django import forms

from thermal_rabi.conf import get_setting
from thermal_rabi.constants import ATOMIC_MASS, KHZ, MHZ, MICROSECOND, MILLIKELVIN, NANOMETER, TWO_PI
from thermal_rabi.distribution import EffectiveRabiDistribution, TemperatureCalibration
from thermal_rabi.dynamics import build_rap_pulse
from thermal_rabi.exceptions import ConfigError
from thermal_rabi.modes import (
    REFERENCE_DOPPLER_TEMPERATURE, REFERENCE_MODE_FREQUENCIES_MHZ, LaserGeometry, ModeSet, reference_geometry,
)
from thermal_rabi.utils import config_hash

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
PRESET_KEYS = ('reference_preset', 'paper_preset')

REFERENCE_PRESET = {
    'wavelength_nm': 729.0,
    'ion_mass_u': 40.0,
    'projection_angles_deg': [math.degrees(a) for a in reference_geometry().projection_angles],
    'mode_frequencies_mhz': list(REFERENCE_MODE_FREQUENCIES_MHZ),
    'doppler_temperature_mk': REFERENCE_DOPPLER_TEMPERATURE / MILLIKELVIN,
    'temperature_mk': 2 * REFERENCE_DOPPLER_TEMPERATURE / MILLIKELVIN,
    'omega0_khz': 104.9,
    'omega0_cal_khz': 221.0,
    'tau_sigma_us': 50.0,
    'chirp_range_khz': 100.0,
    'n_samples': 50,
    'temperature_grid_td': [0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
    'parasitic_offset_mhz': 8.0,
}


def _number_list(value, name, length=None, minimum=None, exclusive=True):
    if not isinstance(value, list) or not value:
        raise forms.ValidationError('%s must be a non-empty list of numbers' % name)
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise forms.ValidationError('%s must hold numbers only' % name)
    if length is not None and len(value) != length:
        raise forms.ValidationError('%s must hold exactly %d numbers' % (name, length))
    if minimum is not None:
        below = [v for v in value if (v <= minimum if exclusive else v < minimum)]
        if below:
            raise forms.ValidationError('%s must be %s %g, got %r' % (
                name, 'above' if exclusive else 'at least', minimum, below[0]))
    return [float(v) for v in value]


class RunConfigForm(forms.Form):
    schema_version = forms.IntegerField(min_value=SCHEMA_VERSION, max_value=SCHEMA_VERSION)
    reference_preset = forms.BooleanField(required=False)
    paper_preset = forms.BooleanField(required=False)

    wavelength_nm = forms.FloatField(min_value=1e-9)
    ion_mass_u = forms.FloatField(min_value=1e-9)
    projection_angles_deg = forms.JSONField()
    mode_frequencies_mhz = forms.JSONField()
    doppler_temperature_mk = forms.FloatField(min_value=1e-12)
    temperature_mk = forms.FloatField(required=False, min_value=1e-12)
    b = forms.FloatField(required=False, min_value=0.0)
    calibration_c = forms.FloatField(required=False, min_value=1e-12)

    omega0_khz = forms.FloatField(required=False, min_value=1e-9)
    omega0_cal_khz = forms.FloatField(required=False, min_value=1e-9)
    tau_sigma_us = forms.FloatField(required=False, min_value=1e-9)
    chirp_range_khz = forms.FloatField(required=False)
    n_samples = forms.IntegerField(required=False, min_value=2)

    truncation = forms.FloatField(required=False, min_value=1e-12, max_value=0.099)
    sigma_ratio = forms.FloatField(required=False, min_value=1e-9)
    dx = forms.FloatField(required=False, min_value=1e-6, max_value=0.1)
    quadrature_nodes = forms.IntegerField(required=False, min_value=64)
    grid_points = forms.IntegerField(required=False, min_value=100)

    y_range = forms.JSONField(required=False)
    delta_range_khz = forms.JSONField(required=False)
    grid = forms.JSONField(required=False)
    temperature_grid_td = forms.JSONField(required=False)
    parasitic_offset_mhz = forms.FloatField(required=False)

    output_dir = forms.CharField(required=False)
    seed = forms.IntegerField(required=False, min_value=0, max_value=2 ** 64 - 1)

    def clean_projection_angles_deg(self):
        angles = _number_list(self.cleaned_data['projection_angles_deg'], 'projection_angles_deg', minimum=0,
                              exclusive=False)
        if any(a > 90 for a in angles):
            raise forms.ValidationError('projection_angles_deg must lie in [0, 90]')
        return angles

    def clean_mode_frequencies_mhz(self):
        return _number_list(self.cleaned_data['mode_frequencies_mhz'], 'mode_frequencies_mhz', minimum=0)

    def clean_y_range(self):
        value = self.cleaned_data.get('y_range')
        if value is None:
            return None
        low, high = _number_list(value, 'y_range', length=2, minimum=0)
        if not low < high:
            raise forms.ValidationError('y_range must be increasing')
        return [low, high]

    def clean_delta_range_khz(self):
        value = self.cleaned_data.get('delta_range_khz')
        if value is None:
            return None
        low, high = _number_list(value, 'delta_range_khz', length=2)
        if not low < high:
            raise forms.ValidationError('delta_range_khz must be increasing')
        return [low, high]

    def clean_grid(self):
        value = self.cleaned_data.get('grid')
        if value is None:
            return None
        values = _number_list(value, 'grid', length=2, minimum=2, exclusive=False)
        if any(v != int(v) for v in values):
            raise forms.ValidationError('grid must hold two integers')
        return [int(v) for v in values]

    def clean_temperature_grid_td(self):
        value = self.cleaned_data.get('temperature_grid_td')
        if value is None:
            return None
        ratios = sorted(_number_list(value, 'temperature_grid_td', minimum=0))
        if len(ratios) < 5 or ratios[0] > 0.5 or ratios[-1] < 5:
            raise forms.ValidationError(
                'temperature_grid_td must hold at least 5 temperatures spanning [0.5, 5] T_D')
        return ratios

    def clean(self):
        cleaned_data = super(RunConfigForm, self).clean()
        has_temperature = cleaned_data.get('temperature_mk') is not None
        has_b = cleaned_data.get('b') is not None
        if has_temperature == has_b and 'temperature_mk' not in self.errors and 'b' not in self.errors:
            self.add_error('temperature_mk', 'exactly one of temperature_mk or b is required')
        angles = cleaned_data.get('projection_angles_deg')
        frequencies = cleaned_data.get('mode_frequencies_mhz')
        if angles and frequencies and len(angles) != len(frequencies):
            self.add_error('projection_angles_deg', 'expected %d projection angles (one per mode), got %d' % (
                len(frequencies), len(angles)))
        return cleaned_data


@dataclass(frozen=True)
class RunConfig:
    """
    Validated run configuration in SI units and rad/s. `source` keeps the
    cleaned boundary-unit document the config hash is computed from.
    """
    geometry: LaserGeometry
    mode_frequencies: Tuple[float, ...]
    doppler_temperature: float
    temperature: Optional[float]
    b: Optional[float]
    calibration_c: float
    omega0: Optional[float]
    omega0_cal: Optional[float]
    tau_sigma: Optional[float]
    chirp_range: Optional[float]
    n_samples: int
    truncation: float
    sigma_ratio: float
    dx: float
    quadrature_nodes: int
    grid_points: int
    y_range: Tuple[float, float]
    delta_range: Tuple[float, float]
    grid: Tuple[int, int]
    temperature_grid: Tuple[float, ...]
    parasitic_offset: float
    output_dir: str
    seed: Optional[int]
    source: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_cleaned_data(cls, data):
        def pick(name, default):
            value = data.get(name)
            return default if value is None else value

        reference_chirp = TWO_PI * 100 * KHZ
        delta_range = data.get('delta_range_khz')
        if delta_range is None:
            delta_range = (-1.5 * reference_chirp, 1.5 * reference_chirp)
        else:
            delta_range = tuple(TWO_PI * d * KHZ for d in delta_range)
        omega0_khz = data.get('omega0_khz')
        omega0_cal_khz = data.get('omega0_cal_khz')
        tau_sigma_us = data.get('tau_sigma_us')
        chirp_range_khz = data.get('chirp_range_khz')
        doppler_temperature = data['doppler_temperature_mk'] * MILLIKELVIN
        return cls(
            geometry=LaserGeometry(
                data['wavelength_nm'] * NANOMETER,
                data['ion_mass_u'] * ATOMIC_MASS,
                tuple(math.radians(a) for a in data['projection_angles_deg']),
            ),
            mode_frequencies=tuple(TWO_PI * f * MHZ for f in data['mode_frequencies_mhz']),
            doppler_temperature=doppler_temperature,
            temperature=None if data.get('temperature_mk') is None else data['temperature_mk'] * MILLIKELVIN,
            b=data.get('b'),
            calibration_c=pick('calibration_c', get_setting('CALIBRATION_C')),
            omega0=None if omega0_khz is None else TWO_PI * omega0_khz * KHZ,
            omega0_cal=None if omega0_cal_khz is None else TWO_PI * omega0_cal_khz * KHZ,
            tau_sigma=None if tau_sigma_us is None else tau_sigma_us * MICROSECOND,
            chirp_range=None if chirp_range_khz is None else chirp_range_khz * KHZ,
            n_samples=pick('n_samples', 50),
            truncation=pick('truncation', get_setting('TRUNCATION')),
            sigma_ratio=pick('sigma_ratio', get_setting('SIGMA_RATIO')),
            dx=pick('dx', get_setting('DX')),
            quadrature_nodes=pick('quadrature_nodes', get_setting('QUADRATURE_NODES')),
            grid_points=pick('grid_points', get_setting('GRID_POINTS')),
            y_range=tuple(pick('y_range', (0.5, 1.5))),
            delta_range=tuple(delta_range),
            grid=tuple(pick('grid', (61, 61))),
            temperature_grid=tuple(r * doppler_temperature for r in pick('temperature_grid_td', ())),
            parasitic_offset=TWO_PI * pick('parasitic_offset_mhz', 8.0) * MHZ,
            output_dir=pick('output_dir', '') or get_setting('OUTPUT_DIR'),
            seed=data.get('seed'),
            source=data,
        )

    @property
    def calibration(self):
        return TemperatureCalibration(self.calibration_c, self.doppler_temperature)

    @property
    def thermal_b(self):
        """
        Return b, converted from the temperature through T / T_D = c b^2
        when the config gives a temperature
        """
        if self.b is not None:
            return self.b
        return self.calibration.b_for_temperature(self.temperature / self.doppler_temperature)

    @property
    def thermal_temperature(self):
        """
        Return the temperature in kelvin, converted from b when the config
        gives b
        """
        if self.temperature is not None:
            return self.temperature
        return self.calibration.temperature(self.b)

    @property
    def modes(self):
        return ModeSet.from_geometry(self.geometry, self.mode_frequencies, self.thermal_temperature)

    @property
    def hash(self):
        return config_hash(self.source)

    def require(self, *names):
        """
        Raise ConfigError for every optional field in `names` left unset
        """
        missing = {name: ['this field is required by the command'] for name in names
                   if getattr(self, name) is None}
        if missing:
            raise ConfigError('missing configuration: %s' % ', '.join(sorted(missing)), missing)

    def effective_distribution(self, omega0=None):
        if omega0 is None:
            self.require('omega0')
            omega0 = self.omega0
        return EffectiveRabiDistribution.from_b(omega0, self.thermal_b)

    def rap_pulse(self, omega0_cal=None, chirp_range=None):
        self.require('tau_sigma')
        if omega0_cal is None:
            self.require('omega0_cal')
            omega0_cal = self.omega0_cal
        if chirp_range is None:
            self.require('chirp_range')
            chirp_range = self.chirp_range
        return build_rap_pulse(omega0_cal, self.tau_sigma, chirp_range, self.n_samples)


def clean_run_config(payload):
    """
    Validate a parsed config document and return a RunConfig. With
    `reference_preset` (or its alias `paper_preset`), the preset fills every
    key the document leaves out.
    """
    if not isinstance(payload, dict):
        raise ConfigError('config must be a JSON object', {'__all__': ['config must be a JSON object']})
    data = dict(payload)
    if any(data.get(key) for key in PRESET_KEYS):
        merged = dict(REFERENCE_PRESET)
        if 'b' in data and 'temperature_mk' not in data:
            merged.pop('temperature_mk')
        merged.update(data)
        data = merged
    form = RunConfigForm(data)
    if not form.is_valid():
        errors = {name: [str(message) for message in messages] for name, messages in form.errors.items()}
        summary = '; '.join('%s: %s' % (name, ' '.join(messages)) for name, messages in sorted(errors.items()))
        raise ConfigError('invalid config: %s' % summary, errors)
    cleaned = {name: value for name, value in form.cleaned_data.items() if value is not None}
    return RunConfig.from_cleaned_data(cleaned)


def load_run_config(path):
    try:
        with open(path, encoding='utf-8') as config_file:
            payload = json.load(config_file)
    except OSError as e:
        raise ConfigError('cannot read config %s: %s' % (path, e), {'config': [str(e)]})
    except ValueError as e:
        raise ConfigError('config %s is not valid JSON: %s' % (path, e), {'config': [str(e)]})
    logger.debug('loaded config %s', path)
    return clean_run_config(payload)
