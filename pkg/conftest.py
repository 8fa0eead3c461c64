# This (Python) file is executed before the py.test suite runs.
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
