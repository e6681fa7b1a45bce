from setuptools import setup, find_packages


setup(
    name="cascadesr",
    version='0.0.1',
    description='Cascaded multi-frame and single-frame image super-resolution.',
    packages=find_packages(include=['cascadesr', 'cascadesr.*']),
    tests_require=['pytest'],
    install_requires=[
        'torch>=1.13',
        'numpy',
        'scipy',
        'scikit-image>=0.19',
        'imageio>=2.16',
    ],
    entry_points={
        'console_scripts': ['cascadesr = cascadesr.cli:main'],
    },
)
