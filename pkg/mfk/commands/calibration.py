import logging

import numpy as np

from .. import pipeline
from ..body import calibrate_body
from ..hand import HandSkeleton
from .common import session_truth


L = logging.getLogger(__name__)

SIDES = ('left', 'right')


class CalibrationCmd(object):
    '''
    Commands for body and hand calibration
    '''

    def __init__(self, parent):
        self._parent = parent

    def body(self, session_dir):
        '''
        Calibrate the body skeleton against the triangulated body markers

        Writes the ``body_calibration`` artifact: the skeleton, the loss after every epoch
        and after the final refinement, per-marker residuals and the person-to-camera
        transform of every aligned frame.

        Parameters
        ----------
        session_dir : str
            Input session bundle
        '''
        p = self._parent
        run = p.start('calibrate-body', session_dir)
        session = p.load(session_dir)
        triangulated = pipeline.session_triangulation(session, p.config)
        sequence = pipeline.body_sequence(session, triangulated)
        result = calibrate_body(sequence, config=p.config, seed=p.seed)
        session.add_artifact('body_calibration', pipeline.body_calibration_data(result), p.config)
        run.save_session(session, ['body_calibration'])

        rms = [v for v in result.marker_rms.values() if np.isfinite(v)]
        metrics = {'loss_updates': len(result.loss_history) - 1,
                   'initial_loss': float(result.loss_history[0]),
                   'final_loss': float(result.loss_history[-1]),
                   'marker_rms_m': float(np.mean(rms)) if rms else None}
        truth = session_truth(session)
        if truth is not None:
            err = np.linalg.norm(result.skeleton.offsets - truth.body_skeleton.offsets, axis=1)[1:]
            metrics['truth'] = {'offset_mean_m': float(err.mean()), 'offset_max_m': float(err.max())}
        p.message('Body loss {:.6g} -> {:.6g}'.format(metrics['initial_loss'], metrics['final_loss']))
        return run.finish(metrics)

    def hand(self, session_dir, side=None):
        '''
        Calibrate hand skeletons from the touch protocol of a session

        Writes the ``hand_calibration`` artifact, keyed by side.

        Parameters
        ----------
        session_dir : str
            Input session bundle
        side : str, optional
            ``left`` or ``right``. Both hands by default
        '''
        p = self._parent
        sides = SIDES if side is None else (side,)
        run = p.start('calibrate-hand', session_dir)
        session = p.load(session_dir)
        result = pipeline.calibrate_hands(session, sides, p.config)
        if 'hand_calibration' in session.artifacts:
            merged = dict(session.artifact('hand_calibration').data)
            merged.update(result)
            result = merged
        session.add_artifact('hand_calibration', result, p.config)
        run.save_session(session, ['hand_calibration'])

        metrics = {}
        truth = session_truth(session)
        for s in sides:
            m = {'residual_m': result[s]['residual'], 'iterations': len(result[s]['loss_history'])}
            if truth is not None and s in truth.hand_skeletons:
                fitted = HandSkeleton.from_dict(result[s]['skeleton'])
                m['scale_max_error'] = float(np.max(np.abs(fitted.scales - truth.hand_skeletons[s].scales)))
            metrics[s] = m
            p.message('{} hand residual {:.4f} m'.format(s, m['residual_m']))
        return run.finish({'hands': metrics})
