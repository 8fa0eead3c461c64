# -*- coding: utf-8 -*-
#

from setuptools import setup


long_description = """
mfk
===

Marker fusion kit: tools for processing full-body human-object interaction captures
recorded with a multi-camera rig, square fiducial markers and a wearable motion capture
suit with gloves.

What does it do?
----------------

Triangulates marker corners across calibrated cameras and tracks rigid and articulated
objects from them. Calibrates the suit's body skeleton and the gloves' hand skeletons
against the camera frame, fills object tracking gaps from the body, fuses wrist poses
with their markers, and derives motion features and contacts. Synthetic captures with
ground truth and camera and marker visibility studies come with it.
"""


for line in open('mfk/__init__.py'):
    if line.startswith("__version__"):
        version = line.split("=")[1].strip()[1:-1]


setup(
    name='mfk',
    zip_safe=False,
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.6',
        'torch>=1.10',
        'trimesh>=3.9',
        'rdflib>=5.0.0',
    ],
    version=version,
    packages=['mfk',
              'mfk.data_trans',
              'mfk.commands'],
    author='mfk authors and contributors',
    description='Multi-view marker tracking and wearable motion capture fusion',
    long_description=long_description,
    license='MIT',
    entry_points={
        'console_scripts': [
            'mfk = mfk.cli:main',
        ],
    },
    classifiers=[
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering'
    ]
)
