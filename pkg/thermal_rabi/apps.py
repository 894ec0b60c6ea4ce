from django.apps import AppConfig


class ThermalRabiConfig(AppConfig):
    name = 'thermal_rabi'
    verbose_name = 'Thermal Rabi'
