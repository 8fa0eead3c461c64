import unittest

from mfk.errors import (CorruptStream, DegenerateGeometry, InvalidSpec, MFKError, NonConvergence,
                        NumericalError, ValidationError)


class ErrorsTest(unittest.TestCase):

    def test_exit_status(self):
        self.assertEqual(InvalidSpec('x').exit_status, 2)
        self.assertEqual(CorruptStream('x').exit_status, 2)
        self.assertEqual(NonConvergence('x').exit_status, 3)
        self.assertEqual(DegenerateGeometry('x').exit_status, 3)

    def test_hierarchy(self):
        self.assertTrue(issubclass(CorruptStream, ValidationError))
        self.assertTrue(issubclass(NonConvergence, NumericalError))
        self.assertTrue(issubclass(NumericalError, MFKError))

    def test_as_dict(self):
        self.assertEqual(CorruptStream('truncated line').as_dict(),
                         {'error': 'corrupt_stream', 'message': 'truncated line'})
