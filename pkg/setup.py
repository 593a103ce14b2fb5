#!/usr/bin/env python

"""The setup script."""

from setuptools import setup, find_packages

with open('README.rst') as readme_file:
    readme = readme_file.read()

with open('HISTORY.rst') as history_file:
    history = history_file.read()

requirements = [
    'matplotlib',
    'numpy',
    'scipy',
    'pandas',
]


test_requirements = [ ]

setup(
    author="qdcformer developers",
    author_email='qdcformer@users.noreply.github.com',
    python_requires='>=3.8',
    classifiers=[
        'Development Status :: 2 - Pre-Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
    ],
    description="Q-value regularized decision ConvFormer for offline "
        "reinforcement learning on small, exactly scorable environments",
    entry_points={
        'console_scripts': [
            'qdcformer=qdcformer.cli:main',
        ],
    },
    install_requires=requirements,
    license="MIT license",
    long_description=readme + '\n\n' + history,
    include_package_data=True,
    package_data={
        'qdcformer.utils': ['qdcformer.cfg'],
        'qdcformer.envs': ['templates/*.json'],
        'qdcformer.json': ['templates/*.json'],
    },
    keywords='qdcformer',
    name='qdcformer',
    packages=find_packages(include=['qdcformer', 'qdcformer.*']),
    test_suite='tests',
    tests_require=test_requirements,
    version='0.1.0',
    zip_safe=False,
)
