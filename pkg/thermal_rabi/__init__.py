__title__ = 'Thermal Rabi'
__version__ = '1.0.0'
__author__ = 'Charles TISSIER'
__license__ = 'MIT'
__copyright__ = 'Copyright 2018 Charles TISSIER'

VERSION = __version__
