'''
Command objects behind the ``mfk`` command line

`MFK` holds the options shared by every verb and one sub-command object per group of
verbs. Each verb reads its inputs, writes its outputs to the output directory and records
the run in ``metrics.json`` and ``provenance.ttl``.
'''
from __future__ import print_function

import logging
import os
import sys

from .config import Config, as_config
from .data_trans.bundle import artifact_file, load_session, save_session
from .data_trans.common_data import dump_json, json_safe
from .errors import InvalidSpec
from .provenance import RunRecord
from .utils import file_digest

from .commands.calibration import CalibrationCmd
from .commands.evaluate import EvaluateCmd
from .commands.postprocess import PostprocessCmd
from .commands.representation import RepresentationCmd
from .commands.simulate import SimulateCmd
from .commands.synthetic import SyntheticCmd
from .commands.tracking import TrackingCmd


L = logging.getLogger(__name__)

METRICS = 'metrics.json'
PROVENANCE = 'provenance.ttl'
RUN_RECORDS = (METRICS, PROVENANCE)


def input_digests(directory):
    '''
    sha256 digests of the files of an input directory, keyed by their relative path

    Run records of an earlier run are left out
    '''
    out = {}
    for root, dirs, files in os.walk(directory):
        dirs.sort()
        for name in sorted(files):
            rel = os.path.relpath(os.path.join(root, name), directory).replace(os.sep, '/')
            if rel in RUN_RECORDS:
                continue
            out[rel] = file_digest(os.path.join(root, name))
    return out


class Run(object):
    '''
    One invocation of a verb

    Parameters
    ----------
    parent : MFK
    verb : str
    inputs : str, optional
        Input session directory
    '''

    def __init__(self, parent, verb, inputs=None):
        self._parent = parent
        self.verb = verb
        self.out = parent.out
        if self.out is None:
            raise InvalidSpec('No output directory given for {}'.format(verb))
        digests = {}
        if inputs is not None:
            if not os.path.isdir(inputs):
                raise InvalidSpec('Input session {} is not a directory'.format(inputs))
            if os.path.realpath(inputs) == os.path.realpath(self.out):
                raise InvalidSpec('The output directory must differ from the input session')
            digests = input_digests(inputs)
        os.makedirs(self.out, exist_ok=True)
        self.inputs = digests
        self.record = RunRecord(verb, parent.seed, parent.config.digest(), digests)
        self.metrics = {}

    def path(self, file_name):
        return os.path.join(self.out, file_name)

    def generated(self, kind, file_name=None):
        self.record.generated(kind, file_name or artifact_file(kind))

    def save_session(self, session, kinds=()):
        ''' Write `session` to the output directory and record its new artifacts '''
        save_session(session, self.out)
        for kind in kinds:
            self.generated(kind)

    def finish(self, metrics=None):
        if metrics:
            self.metrics.update(metrics)
        conf = self._parent.config
        dump_json({'verb': self.verb,
                   'seed': self._parent.seed,
                   'config': conf.as_dict(),
                   'config_hash': conf.digest(),
                   'inputs': self.inputs,
                   'metrics': json_safe(self.metrics)}, self.path(METRICS))
        self.record.save(self.path(PROVENANCE))
        L.info('Run %s of %s finished', self.record.id, self.verb)
        return self.metrics


class MFK(object):
    '''
    Top-level command object

    Parameters
    ----------
    config : Config, dict or str, optional
        Configuration, or the path of a JSON configuration file
    seed : int
        Seed for every stochastic step
    out : str, optional
        Output directory
    output : file, optional
        Where `message` writes. Defaults to standard output
    '''

    def __init__(self, config=None, seed=0, out=None, output=None):
        if isinstance(config, str):
            config = Config.open(config)
        self.config = as_config(config)
        self.seed = int(seed)
        self.out = out
        self._output = output

        self.synthetic = SyntheticCmd(self)
        ''' Synthetic captures '''

        self.tracking = TrackingCmd(self)
        ''' Object tracking and articulation '''

        self.calibration = CalibrationCmd(self)
        ''' Body and hand calibration '''

        self.postprocess = PostprocessCmd(self)
        ''' Gap filling and wrist fusion '''

        self.representation = RepresentationCmd(self)
        ''' Motion features and contacts '''

        self.simulate = SimulateCmd(self)
        ''' Camera and marker studies '''

        self.evaluate = EvaluateCmd(self)
        ''' Evaluation harnesses '''

    def message(self, *args):
        print(*args, file=self._output or sys.stdout)

    def start(self, verb, inputs=None):
        ''' Begin a run of `verb` '''
        return Run(self, verb, inputs)

    def load(self, session_dir):
        return load_session(session_dir)
