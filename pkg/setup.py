from setuptools import setup, find_packages

setup(
    name="patdiv",
    version="0.1.0",
    author="[removed for review]",
    license='GPLv3+',
    packages=find_packages(include=['patdiv', 'patdiv.*']),
    install_requires=[
        'numpy',
        'pandas',
        'scipy',
        'ujson',
    ],
    entry_points={
        'console_scripts': ['patdiv=patdiv.run_pipeline:main'],
    },
)
