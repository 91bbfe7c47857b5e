from setuptools import setup

install_requires = ['numpy>=1.17', 'scipy>=1.3']

setup(name='lqrk',
      version='0.1.0',
      description='Reproducing kernels for linear-quadratic optimal control',
      license='Apache 2.0',
      packages=['lqrk'],
      install_requires=install_requires,
      python_requires='>=3.6',
      entry_points={
          'console_scripts': ['lqrk=lqrk.cli:main'],
      },
      long_description=open('README.md').read(),
      zip_safe=False)
