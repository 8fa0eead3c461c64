import logging

import numpy as np

from .. import pipeline
from .common import joint_errors, session_truth, track_errors


L = logging.getLogger(__name__)


class TrackingCmd(object):
    '''
    Commands for object tracking
    '''

    def __init__(self, parent):
        self._parent = parent

    def track_objects(self, session_dir, workers=None):
        '''
        Triangulate every marker corner and track the objects of a session

        Writes the ``triangulated``, ``poses`` and ``reprojection`` artifacts.

        Parameters
        ----------
        session_dir : str
            Input session bundle
        workers : int, optional
            Size of the triangulation thread pool. Defaults to ``MFK_THREADS`` or the CPU
            count
        '''
        p = self._parent
        run = p.start('track-objects', session_dir)
        session = p.load(session_dir)
        triangulated = pipeline.triangulate_session(session, p.config, workers)
        records = pipeline.track_objects(session, triangulated, p.config)
        report = pipeline.session_report(session, triangulated)

        session.add_artifact('triangulated', pipeline.triangulated_records(triangulated), p.config)
        session.add_artifact('poses', records, p.config)
        session.add_artifact('reprojection', report.as_dict(), p.config)
        run.save_session(session, ['triangulated', 'poses', 'reprojection'])

        tracks = pipeline.object_tracks(records, session.n_frames)
        metrics = {'reprojection': report.as_dict(),
                   'corners': sum(len(cs) for cs in triangulated.values()),
                   'tracked_frames': {name: int(poses.valid.sum()) for name, (poses, _) in sorted(tracks.items())}}
        truth = session_truth(session)
        if truth is not None:
            metrics['truth'] = track_errors(tracks, truth)
        p.message('Reprojection RMS {:.4f} px over {} corners'.format(report.rms, metrics['corners']))
        return run.finish(metrics)

    def fit_articulation(self, session_dir):
        '''
        Fit the joint of every articulated part from its tracked motion

        Needs the ``poses`` artifact of `track_objects`. Writes the ``articulation``
        artifact.

        Parameters
        ----------
        session_dir : str
            Input session bundle
        '''
        p = self._parent
        run = p.start('fit-articulation', session_dir)
        session = p.load(session_dir)
        triangulated = pipeline.session_triangulation(session, p.config)
        fitted = pipeline.fit_articulations(session, triangulated, session.artifact('poses').data,
                                            p.config)
        session.add_artifact('articulation', fitted, p.config)
        run.save_session(session, ['articulation'])

        truth = session_truth(session)
        metrics = {}
        for name, parts in sorted(fitted.items()):
            obj = session.objects[name]
            entries = {}
            for i, entry in enumerate(parts):
                m = {'configurations': len(entry['frames'])}
                if 'error' in entry:
                    m['error'] = entry['error']
                elif truth is not None and name in truth.joints:
                    m.update(joint_errors(entry['joint'], truth.joints[name][i]))
                    gt = np.array([truth.object_states[name][f].part_states[i] for f in entry['frames']])
                    s = np.asarray(entry['states'])
                    m['state_error'] = float(min(np.mean(np.abs(s - gt)), np.mean(np.abs(s + gt))))
                entries[obj.articulated_parts[i].name] = m
            metrics[name] = entries
        p.message('Fitted {} parts'.format(sum(len(v) for v in fitted.values())))
        return run.finish({'parts': metrics})
