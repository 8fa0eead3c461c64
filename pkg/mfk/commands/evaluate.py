import csv
import logging

from ..postprocess import drop_and_recover, drop_and_recover_wrist
from ..synthetic import carry_sequence, wrist_streams
from ..utils import parse_int_list


L = logging.getLogger(__name__)

WINDOWS = '5,15,30,60'


def write_rows_csv(rows, path):
    ''' Write a list of flat dicts sharing their keys as CSV, columns in first-row order '''
    with open(path, 'w', newline='') as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator='\n')
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


class EvaluateCmd(object):
    '''
    Evaluation harnesses on synthetic sequences
    '''

    def __init__(self, parent):
        self._parent = parent

    def drop_recover(self, windows=WINDOWS, frames=300, drops=10):
        '''
        Drop windows of a carried box's track and of a wrist's marker track, then recover
        them

        The box is recovered by hole filling from the body and by interpolation, the wrist
        by fusion with the suit. Writes ``drop_recover.csv`` with the mean errors of the
        fill and of the interpolation baseline per window length, and
        ``drop_recover_wrist.csv``.

        Parameters
        ----------
        windows : str or list of int
            Comma-separated window lengths in frames
        frames : int
            Length of the synthetic sequences
        drops : int
            Dropped windows per length
        '''
        p = self._parent
        lengths = parse_int_list(windows)
        run = p.start('evaluate-drop-recover')
        carry = carry_sequence(int(frames), seed=p.seed)
        rows = drop_and_recover(carry.track, carry.stream, carry.mesh, lengths, int(drops), seed=p.seed,
                                config=p.config)
        write_rows_csv(rows, run.path('drop_recover.csv'))
        run.generated('drop_recover', 'drop_recover.csv')

        wrist = wrist_streams(int(frames), seed=p.seed)
        wrist_rows = drop_and_recover_wrist(wrist.marker, wrist.mocap, wrist.confidence, lengths, int(drops),
                                            seed=p.seed, config=p.config)
        write_rows_csv(wrist_rows, run.path('drop_recover_wrist.csv'))
        run.generated('drop_recover_wrist', 'drop_recover_wrist.csv')
        for r in rows:
            p.message('{:>4} frames: fill {:.4f} m, baseline {:.4f} m'
                      .format(r['window'], r['fill_translation'], r['baseline_translation']))
        return run.finish({'frames': int(frames), 'drops_per_window': int(drops),
                           'object': rows, 'wrist': wrist_rows})
