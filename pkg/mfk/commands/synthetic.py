import logging

from ..synthetic import SceneSpec, generate_capture
from ..utils import parse_list


L = logging.getLogger(__name__)


class SyntheticCmd(object):
    '''
    Commands for synthetic captures
    '''

    def __init__(self, parent):
        self._parent = parent

    def generate(self, cameras=None, frames=None, pixel_noise=None, mocap_noise=None, touch_noise=None,
                 objects=None, hands=True, carry=True):
        '''
        Generate a synthetic capture session with its ground truth

        The session is written as a bundle to the output directory. Its ``truth`` artifact
        holds everything the capture was generated from.

        Parameters
        ----------
        cameras : int
            Number of cameras in the rig
        frames : int
            Number of camera frames
        pixel_noise : float
            Corner detection noise, in pixels
        mocap_noise : float
            Suit and glove angle noise, in radians
        touch_noise : float
            Fingertip placement noise of the hand protocol, in meters
        objects : str or list of str
            Comma-separated object names
        hands : bool
            Record the hand calibration protocol
        carry : bool
            Carry the box through the middle of the capture
        '''
        params = {'hands': bool(hands), 'carry': bool(carry)}
        for key, value in (('n_cameras', cameras), ('n_frames', frames), ('pixel_noise', pixel_noise),
                           ('mocap_noise', mocap_noise), ('touch_noise', touch_noise)):
            if value is not None:
                params[key] = value
        if objects is not None:
            params['objects'] = parse_list(objects)
        spec = SceneSpec(**params)
        run = self._parent.start('gen-synthetic')
        capture = generate_capture(spec, seed=self._parent.seed)
        session = capture.session
        run.save_session(session, ['truth'])
        for name in ('cameras.json', 'detections.jsonl', 'mocap.jsonl', 'session.json'):
            run.generated(name.split('.')[0], name)
        metrics = {
            'scene': spec.to_dict(),
            'frames': session.n_frames,
            'cameras': len(session.rig),
            'detections': len(session.detections),
            'objects': sorted(session.objects),
            'touch_events': {side: len(ev) for side, ev in sorted(session.touches.items())},
        }
        self._parent.message('Generated {} detections over {} frames'
                             .format(metrics['detections'], metrics['frames']))
        return run.finish(metrics)
