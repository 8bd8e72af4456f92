# -*- coding: utf-8 -*-
import os

from setuptools import find_packages
from setuptools import setup


base_dir = os.path.dirname(__file__)
setup(
    name='alfalab',
    version='0.1.0',
    description='Hardness distributions of resolvent-modified SAT instances under stochastic local search',
    setup_requires='setuptools',
    license='Apache License 2.0',
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: Apache Software License',
        'Operating System :: OS Independent',
    ],
    entry_points={
        'console_scripts': ['alfalab=alfalab.alfalab:main']},
    packages=find_packages(exclude=['tests']),
    package_data={'alfalab': ['schema.yaml']},
    python_requires='>=3.7',
    install_requires=[
        'envparse>=0.2.0',
        'joblib>=0.14',
        'jsonschema>=2.6.0',
        'numpy>=1.17',
        'pandas>=1.5.0',
        'PyStaticConfiguration>=0.10.3',
        'python-dateutil>=2.6.0',
        'PyYAML>=3.12',
        'scipy>=1.4',
        'simplejson>=3.10.0',
        'statsmodels>=0.10',
        'texttable>=0.8.8',
    ]
)
