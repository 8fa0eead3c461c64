# -*- coding: utf-8 -*-

"""
.. _mfk_module:

mfk
===

Marker fusion kit: multi-view marker triangulation, rigid and articulated object
tracking, and alignment of wearable motion capture with a calibrated camera rig.

An introduction can be found in the README.
"""

__version__ = '0.4.0.dev0'
__author__ = 'mfk authors and contributors'

import logging

LOGGER = logging.getLogger(__name__)
LOGGER.addHandler(logging.NullHandler())

CAMERA_RATE = 30.0
''' Frame rate of the camera rig, in Hz '''

MOCAP_RATE = 60.0
''' Frame rate of the wearable motion capture suit and gloves, in Hz '''

SCHEMA_VERSION = 2
''' Version stamped into every saved session bundle '''

BASE_SCHEMA_URL = 'http://schema.mfk.invalid/2026/capture'
BASE_DATA_URL = 'http://data.mfk.invalid/capture'
