# -*- coding: utf-8 -*-

import os

from setuptools import setup, find_packages

# load __version__ without importing anything
version_file = os.path.join(
    os.path.dirname(__file__),
    'pyfedhql/version.py')

with open(version_file, 'r') as f:
    # use eval to get a clean string of version from file
    __version__ = eval(f.read().strip().split('=')[-1])

# minimal requirements for installing PyFedHQL
# note that `pip` requires setuptools itself
requirements_default = set([
    'numpy',  # all data structures, PCG64 random streams
    'scipy',  # statistical tests of the verification suites
    'pandas',  # learning curves and reports
    'setuptools',  # used for packaging
    'colorlog'  # log in pretty colors
])

# "easy" requirements should install without compiling anything
requirements_easy = set([
    'setuptools',  # do setuptools stuff
    'pandas',
    'colorlog'])  # log in pretty colors

# requirements for building documentation
requirements_docs = set([
    'sphinx',
    'sphinx_rtd_theme',
    'sphinx-automodapi',
    'sphinx-autodoc-typehints',
    'sphinx-paramlinks',
    'autodocsumm',
    'm2r2',
    'numpy',
    'scipy',
    'pandas',
    'colorlog'])

with open('README.rst') as f:
    readme = f.read()

setup(
    name='PythonFedHQL',
    version=__version__,
    description='Python Package for Federated Heterogeneous Q-Learning with Black-Box Agents',
    long_description=readme,
    long_description_content_type='text/x-rst',
    keywords=['Reinforcement Learning', 'Federated Learning', 'Q-Learning', 'DQN', 'Heterogeneous Agents'],
    python_requires='>=3.8',
    classifiers=[
        'Programming Language :: Python',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Natural Language :: English',
        'Topic :: Scientific/Engineering :: Artificial Intelligence'],
    license="",
    packages=find_packages(exclude=('tests', 'docs', 'examples')),
    install_requires=list(requirements_default),
    extras_require={'easy': list(requirements_easy),
                    'docs': list(requirements_docs)},
    entry_points={
        'console_scripts': ['pyfedhql=pyfedhql.cli:main']
    },
    package_data={'': ['*.cfg']},
    data_files=[('configs', ['configs/table1.cfg', 'configs/table2.cfg', 'configs/chain.cfg'])]
)
