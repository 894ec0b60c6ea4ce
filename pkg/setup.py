#!/usr/bin/env python
import os
from thermal_rabi import VERSION
from setuptools import setup, find_packages


README = os.path.join(os.path.dirname(__file__), 'README.rst')

# When running tests using tox, README.md is not found
try:
    with open(README) as file:
        long_description = file.read()
except Exception:
    long_description = ''


setup(
    name='thermal-rabi',
    version=VERSION,
    description='Thermal Rabi-frequency distributions, rapid adiabatic passage and carrier Rabi thermometry',
    long_description=long_description,
    author='Charles TISSIER',
    author_email='charles@vingtcinq.io',
    license='MIT',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Physics',
        'License :: OSI Approved :: MIT License',
        'Framework :: Django :: 3.2',
        'Framework :: Django :: 4.2',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
    keywords='python django trapped-ion rabi thermometry rapid-adiabatic-passage',
    packages=find_packages(exclude=['examples', 'examples.*']),
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=[
        'Django>=3.2',
        'numpy>=1.21',
        'scipy>=1.8',
    ],
    extras_require={
        'tests': ['factory_boy>=3.2'],
    },
    entry_points={
        'console_scripts': [
            'thermal-rabi=thermal_rabi.cli:main',
        ],
    },
)
