import logging

from .. import pipeline
from .common import session_truth, track_errors


L = logging.getLogger(__name__)


class PostprocessCmd(object):
    '''
    Commands for post-processing tracked sessions
    '''

    def __init__(self, parent):
        self._parent = parent

    def run(self, session_dir):
        '''
        Fill object tracking gaps from the body and fuse the wrists with their markers

        Needs the ``poses`` and ``body_calibration`` artifacts. Replaces ``poses`` with the
        filled tracks and writes the ``postprocess`` artifact.

        Parameters
        ----------
        session_dir : str
            Input session bundle
        '''
        p = self._parent
        run = p.start('postprocess', session_dir)
        session = p.load(session_dir)
        triangulated = pipeline.session_triangulation(session, p.config)
        before = pipeline.object_tracks(session.artifact('poses').data, session.n_frames)
        records, report = pipeline.postprocess_session(session, triangulated, p.config)
        session.add_artifact('poses', records, p.config)
        session.add_artifact('postprocess', report, p.config)
        run.save_session(session, ['poses', 'postprocess'])

        after = pipeline.object_tracks(records, session.n_frames)
        metrics = {
            'fills': len(report['fills']),
            'flagged_fills': sum(1 for f in report['fills'] if f['flags']),
            'filled_frames': {name: int(after[name][0].valid.sum() - before[name][0].valid.sum())
                              for name in sorted(after)},
            'wrists': {side: {'tracked_frames': w['tracked_frames'], 'flags': w['flags'], 'jerk': w['jerk']}
                       for side, w in sorted(report['wrists'].items())},
        }
        truth = session_truth(session)
        if truth is not None:
            metrics['truth'] = track_errors(after, truth)
        p.message('Filled {} gaps'.format(metrics['fills']))
        return run.finish(metrics)
