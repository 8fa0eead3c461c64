'''
The ``mfk`` command line

Global options come before the verb::

    mfk --seed 7 --out run1 gen-synthetic --frames 120
    mfk --out run2 track-objects run1
    mfk --out study simulate occlusion --markers 4,7,10,20,40

Exit status is 0 on success, 2 when inputs fail validation and 3 when a solver fails. Errors
are written to standard error as ``{"error": code, "message": ...}``.
'''
import argparse
import json
import logging
import sys

from . import __version__
from .command import MFK
from .errors import MFKError
from .utils import parse_int_list


L = logging.getLogger(__name__)


def _session(p):
    p.add_argument('session', help='input session bundle directory')


def build_parser():
    parser = argparse.ArgumentParser(prog='mfk', description='Marker fusion kit')
    parser.add_argument('--version', action='version', version='mfk ' + __version__)
    parser.add_argument('--config', help='JSON configuration file')
    parser.add_argument('--seed', type=int, default=0, help='seed for every stochastic step')
    parser.add_argument('--out', required=True, help='output directory')
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'])
    verbs = parser.add_subparsers(dest='verb', metavar='verb')
    verbs.required = True

    p = verbs.add_parser('gen-synthetic', help='generate a synthetic capture session')
    p.add_argument('--cameras', type=int)
    p.add_argument('--frames', type=int)
    p.add_argument('--pixel-noise', type=float)
    p.add_argument('--mocap-noise', type=float)
    p.add_argument('--touch-noise', type=float)
    p.add_argument('--objects', help='comma-separated object names')
    p.add_argument('--no-hands', dest='hands', action='store_false')
    p.add_argument('--no-carry', dest='carry', action='store_false')

    p = verbs.add_parser('track-objects', help='triangulate marker corners and track objects')
    _session(p)
    p.add_argument('--workers', type=int)

    p = verbs.add_parser('fit-articulation', help='fit the joints of articulated parts')
    _session(p)

    p = verbs.add_parser('calibrate-body', help='calibrate the body skeleton')
    _session(p)

    p = verbs.add_parser('calibrate-hand', help='calibrate hand skeletons from the touch protocol')
    _session(p)
    p.add_argument('--side', choices=['left', 'right'])

    p = verbs.add_parser('postprocess', help='fill object track gaps and fuse the wrists')
    _session(p)

    p = verbs.add_parser('export-features', help='compute motion features')
    _session(p)

    p = verbs.add_parser('contacts', help='find body-object contacts')
    _session(p)

    p = verbs.add_parser('simulate', help='camera and marker visibility studies')
    studies = p.add_subparsers(dest='study', metavar='study')
    studies.required = True
    s = studies.add_parser('occlusion', help='tracked ratio by virtual marker count')
    s.add_argument('--markers', type=parse_int_list, default='4,7,10,20,40')
    s.add_argument('--cameras', type=int, default=70)
    s.add_argument('--frames', type=int, default=600)
    s.add_argument('--window', type=int)
    s.add_argument('--stride', type=int)
    s.add_argument('--workers', type=int)
    s = studies.add_parser('cameras', help='detected ratio by camera subset size')
    s.add_argument('--subsets', type=parse_int_list, default='5,10,20,30,40,50,60,70')
    s.add_argument('--cameras', type=int, default=70)
    s.add_argument('--frames', type=int, default=600)
    s.add_argument('--samples', type=int)
    s.add_argument('--workers', type=int)

    p = verbs.add_parser('evaluate', help='evaluation harnesses')
    harnesses = p.add_subparsers(dest='harness', metavar='harness')
    harnesses.required = True
    s = harnesses.add_parser('drop-recover', help='drop and recover tracking windows')
    s.add_argument('--windows', type=parse_int_list, default='5,15,30,60')
    s.add_argument('--frames', type=int, default=300)
    s.add_argument('--drops', type=int, default=10)
    return parser


def dispatch(mfk, args):
    ''' Run the verb named by parsed `args` on `mfk` '''
    verb = args.verb
    if verb == 'gen-synthetic':
        return mfk.synthetic.generate(args.cameras, args.frames, args.pixel_noise, args.mocap_noise,
                                      args.touch_noise, args.objects, args.hands, args.carry)
    if verb == 'track-objects':
        return mfk.tracking.track_objects(args.session, args.workers)
    if verb == 'fit-articulation':
        return mfk.tracking.fit_articulation(args.session)
    if verb == 'calibrate-body':
        return mfk.calibration.body(args.session)
    if verb == 'calibrate-hand':
        return mfk.calibration.hand(args.session, args.side)
    if verb == 'postprocess':
        return mfk.postprocess.run(args.session)
    if verb == 'export-features':
        return mfk.representation.export_features(args.session)
    if verb == 'contacts':
        return mfk.representation.contacts(args.session)
    if verb == 'simulate':
        if args.study == 'occlusion':
            return mfk.simulate.occlusion(args.markers, args.cameras, args.frames, args.window, args.stride,
                                          args.workers)
        return mfk.simulate.cameras(args.subsets, args.cameras, args.frames, args.samples, args.workers)
    if verb == 'evaluate':
        return mfk.evaluate.drop_recover(args.windows, args.frames, args.drops)
    raise AssertionError('Unhandled verb ' + verb)


def main(argv=None, output=None):
    '''
    Entry point of the ``mfk`` console script

    Returns
    -------
    int
        Exit status
    '''
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        mfk = MFK(args.config, args.seed, args.out, output)
        dispatch(mfk, args)
    except MFKError as e:
        L.debug('Run failed', exc_info=True)
        print(json.dumps(e.as_dict(), sort_keys=True), file=sys.stderr)
        return e.exit_status
    return 0


if __name__ == '__main__':
    sys.exit(main())
