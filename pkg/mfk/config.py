'''
Configuration for mfk operations

Settings use dotted keys grouped by the module that reads them, like
``'multiview.outlier_factor'``. A `Config` starts from `DEFAULTS` and can be updated from a
JSON ``.conf`` file. Its digest is the "config hash" recorded with every solved artifact.
'''
import hashlib
import json
import logging
import os

from .errors import InvalidSpec


L = logging.getLogger(__name__)

DEFAULTS = {
    # Triangulation
    'multiview.gn_max_steps': 10,
    'multiview.gn_step_tol': 1e-10,
    'multiview.outlier_factor': 3.0,
    'multiview.outlier_floor_px': 1.0,
    'multiview.parallel_tol_rad': 1e-6,

    # Rigid tracking
    'rigid.rms_weighting': True,

    # Articulation
    'articulation.max_residual_m': 0.01,
    'articulation.max_residual_deg': 5.0,
    'articulation.sliding_max_rotation_deg': 0.5,
    'articulation.revolute_min_rotation_deg': 2.0,
    'articulation.min_displacement_m': 1e-3,
    'articulation.grad_tol': 1e-6,
    'articulation.max_nfev': 2000,

    # Body calibration
    'body.lr': 0.008,
    'body.epochs': 50,
    'body.batch_frames': 50,
    'body.lambda_body': 100.0,
    'body.lambda_foot': 5000.0,
    'body.foot_band': 0.01,
    'body.reg_spine': 0.0,
    'body.reg_symmetry': 0.0,
    'body.max_retries': 6,
    'body.converged_loss': 1e-10,
    'body.grad_tol': 1e-8,
    'body.refine_iterations': 500,

    # Hand calibration
    'hand.iterations': 150,
    'hand.scale_start': 50,
    'hand.offset_start': 100,
    'hand.lambda_tip': 1.0,
    'hand.lambda_wrist': 1.0,
    'hand.lambda_pen': 1.0,
    'hand.lr_markers': 0.002,
    'hand.lr_scales': 0.01,
    'hand.lr_offsets': 0.001,
    'hand.lr_decay': 0.97,
    'hand.pen_softening': 0.005,
    'hand.tie_finger_scales': True,
    'hand.max_residual': 0.05,

    # Post-processing
    'postprocess.proximity_radius': 0.10,
    'postprocess.fusion_max_sigma': 15.0,
    'postprocess.moved_translation': 1e-3,
    'postprocess.moved_rotation_deg': 0.5,

    # Representation
    'representation.contact_threshold': 0.01,
    'representation.foot_height': 0.05,
    'representation.foot_speed': 0.01,

    # Simulation studies
    'simulation.detect_min_views': 2,
    'simulation.track_min_views': 3,
    'simulation.min_tracked_markers': 4,
    'simulation.window': 300,
    'simulation.stride': 30,
    'simulation.subset_samples': 20,
    'simulation.bvh_leaf_size': 8,
}


class Config(object):
    '''
    A mapping of dotted configuration keys to values

    Parameters
    ----------
    values : dict, optional
        Overrides for `DEFAULTS`
    '''

    def __init__(self, values=None):
        self._values = dict(DEFAULTS)
        if values:
            self.update(values)

    @classmethod
    def open(cls, file_name):
        '''
        Load a configuration from a JSON file

        Parameters
        ----------
        file_name : str
            Path to a JSON object of dotted keys

        Returns
        -------
        Config
        '''
        try:
            with open(file_name) as f:
                values = json.load(f)
        except OSError as e:
            raise InvalidSpec('Could not read configuration file {}: {}'.format(file_name, e))
        except ValueError as e:
            raise InvalidSpec('Could not parse configuration file {}: {}'.format(file_name, e))
        if not isinstance(values, dict):
            raise InvalidSpec('Configuration file {} must hold a JSON object'.format(file_name))
        res = cls(values)
        res.source = os.path.abspath(file_name)
        return res

    source = None
    ''' Path of the file this configuration was read from, if any '''

    def update(self, values):
        for k, v in values.items():
            if k not in DEFAULTS:
                L.warning('Unrecognized configuration key %r', k)
            self._values[k] = v

    def __getitem__(self, key):
        return self._values[key]

    def __setitem__(self, key, value):
        self.update({key: value})

    def __contains__(self, key):
        return key in self._values

    def get(self, key, default=None):
        return self._values.get(key, default)

    def section(self, prefix):
        ''' Values under ``prefix.`` with the prefix removed '''
        pfx = prefix + '.'
        return {k[len(pfx):]: v for k, v in self._values.items() if k.startswith(pfx)}

    def as_dict(self):
        return dict(self._values)

    def digest(self):
        ''' sha256 over the canonical JSON form of the settings '''
        canon = json.dumps(self._values, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canon.encode('utf-8')).hexdigest()

    def __eq__(self, other):
        return isinstance(other, Config) and self._values == other._values

    def __repr__(self):
        return 'Config(digest={})'.format(self.digest()[:12])


def as_config(conf):
    ''' Coerce `None`, a `dict`, or a `Config` into a `Config` '''
    if conf is None:
        return Config()
    if isinstance(conf, Config):
        return conf
    return Config(conf)
