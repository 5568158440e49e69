try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup
from os import path

this_directory = path.abspath(path.dirname(__file__))
with open(path.join(this_directory, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

setup(name='LateralMPC',
      version='0.1.1',
      description='Lateral-stability model predictive control for \
    four-wheel vehicles with an ADMM QP solver',
      license='BSD',
      packages=[
          'LateralMPC',
          'LateralMPC.controller',
          'LateralMPC.simulation',
          'LateralMPC.solver',
          'LateralMPC.tires',
          'LateralMPC.utils',
          'LateralMPC.vehicle',
          ],
      package_data={'LateralMPC': ['presets/*.yaml']},
      install_requires=['numpy', 'scipy', 'joblib', 'pyYAML'],
      extras_require={
          "test": ['pytest'],
          },
      entry_points={
          'console_scripts': ['lateral-mpc=LateralMPC.cli:main'],
          },
      long_description=long_description,
      long_description_content_type='text/markdown'
      )
