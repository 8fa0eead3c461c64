import logging

from ..simulation import camera_count_study, virtual_marker_study, write_study_csv
from ..synthetic import study_scene
from ..utils import parse_int_list


L = logging.getLogger(__name__)

MARKER_COUNTS = '4,7,10,20,40'
SUBSET_SIZES = '5,10,20,30,40,50,60,70'


class SimulateCmd(object):
    '''
    Visibility studies on a synthetic scene of a person carrying a box past a table

    The scene is generated from the seed; no session is read.
    '''

    def __init__(self, parent):
        self._parent = parent

    def occlusion(self, markers=MARKER_COUNTS, cameras=70, frames=600, window=None, stride=None,
                  workers=None):
        '''
        Ratio of windows in which the box stays trackable for each number of virtual markers

        Writes ``occlusion.csv`` with columns ``marker_count``, ``mean``, ``stddev``.

        Parameters
        ----------
        markers : str or list of int
            Comma-separated marker counts
        cameras : int
        frames : int
        window : int, optional
            Frames per window. Defaults to ``simulation.window``
        stride : int, optional
            Spacing of window starts. Defaults to ``simulation.stride``
        workers : int, optional
        '''
        p = self._parent
        counts = parse_int_list(markers)
        run = p.start('simulate-occlusion')
        scene = study_scene(int(cameras), int(frames), max(counts), seed=p.seed, config=p.config)
        rows = virtual_marker_study(scene, 'object', counts, window, stride, config=p.config,
                                    workers=workers)
        write_study_csv(rows, run.path('occlusion.csv'), key='marker_count')
        run.generated('occlusion_study', 'occlusion.csv')
        for r in rows:
            p.message('{:>4} markers: {:.4f}'.format(r.key, r.mean))
        return run.finish({'cameras': int(cameras), 'frames': int(frames),
                           'rows': [r.as_dict() for r in rows]})

    def cameras(self, subsets=SUBSET_SIZES, cameras=70, frames=600, samples=None, workers=None):
        '''
        Ratio of marker points detected by random camera subsets to those detected by the
        whole rig

        Writes ``camera_study.csv`` with columns ``subset_size``, ``mean``, ``stddev``.

        Parameters
        ----------
        subsets : str or list of int
            Comma-separated subset sizes
        cameras : int
            Size of the whole rig
        frames : int
        samples : int, optional
            Random subsets per size. Defaults to ``simulation.subset_samples``
        workers : int, optional
        '''
        p = self._parent
        sizes = parse_int_list(subsets)
        run = p.start('simulate-cameras')
        scene = study_scene(int(cameras), int(frames), seed=p.seed, config=p.config)
        rows = camera_count_study(scene, sizes, samples, seed=p.seed, config=p.config, workers=workers)
        write_study_csv(rows, run.path('camera_study.csv'), key='subset_size')
        run.generated('camera_study', 'camera_study.csv')
        for r in rows:
            p.message('{:>4} cameras: {:.4f}'.format(r.key, r.mean))
        return run.finish({'cameras': int(cameras), 'frames': int(frames),
                           'rows': [r.as_dict() for r in rows]})
