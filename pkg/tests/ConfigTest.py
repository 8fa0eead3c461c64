import json
import os
import unittest

import pytest

from mfk.config import DEFAULTS, Config, as_config
from mfk.errors import InvalidSpec


class ConfigTest(unittest.TestCase):

    def test_defaults(self):
        conf = Config()
        self.assertEqual(conf['hand.iterations'], 150)
        self.assertEqual(conf.as_dict(), DEFAULTS)

    def test_override(self):
        conf = Config({'body.epochs': 5})
        self.assertEqual(conf['body.epochs'], 5)
        self.assertEqual(conf['body.lr'], DEFAULTS['body.lr'])

    def test_unknown_key_warns(self):
        with self.assertLogs('mfk.config', level='WARNING'):
            conf = Config({'body.epoch': 5})
        self.assertEqual(conf['body.epoch'], 5)

    def test_section(self):
        sec = Config().section('simulation')
        self.assertEqual(sec['window'], 300)
        self.assertNotIn('simulation.window', sec)

    def test_digest(self):
        self.assertEqual(Config().digest(), Config().digest())
        self.assertNotEqual(Config().digest(), Config({'body.epochs': 49}).digest())
        self.assertEqual(len(Config().digest()), 64)

    def test_setitem(self):
        conf = Config()
        conf['multiview.outlier_factor'] = 4.0
        self.assertEqual(conf, Config({'multiview.outlier_factor': 4.0}))

    def test_as_config(self):
        conf = Config()
        self.assertIs(as_config(conf), conf)
        self.assertEqual(as_config(None), conf)
        self.assertEqual(as_config({'body.epochs': 3})['body.epochs'], 3)


def test_open(tempdir):
    path = os.path.join(tempdir, 'mfk.conf')
    with open(path, 'w') as f:
        json.dump({'rigid.rms_weighting': False}, f)
    conf = Config.open(path)
    assert conf['rigid.rms_weighting'] is False
    assert conf.source == os.path.abspath(path)


def test_open_missing(tempdir):
    with pytest.raises(InvalidSpec):
        Config.open(os.path.join(tempdir, 'absent.conf'))


def test_open_invalid(tempdir):
    path = os.path.join(tempdir, 'bad.conf')
    with open(path, 'w') as f:
        f.write('{"body.epochs": ')
    with pytest.raises(InvalidSpec):
        Config.open(path)


def test_open_not_object(tempdir):
    path = os.path.join(tempdir, 'list.conf')
    with open(path, 'w') as f:
        f.write('[1, 2]')
    with pytest.raises(InvalidSpec):
        Config.open(path)
