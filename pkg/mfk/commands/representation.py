import logging

from .. import pipeline
from ..representation import ContactRecord


L = logging.getLogger(__name__)


class RepresentationCmd(object):
    '''
    Commands deriving motion features and contacts from a calibrated session
    '''

    def __init__(self, parent):
        self._parent = parent

    def export_features(self, session_dir):
        '''
        Compute the motion features of the calibrated body

        Needs the ``body_calibration`` artifact. Writes ``features.bin`` and
        ``features.json``.

        Parameters
        ----------
        session_dir : str
            Input session bundle
        '''
        p = self._parent
        run = p.start('export-features', session_dir)
        session = p.load(session_dir)
        features = pipeline.session_features(session, p.config)
        features.validate()
        session.add_artifact('features', features, p.config)
        run.save_session(session, ['features'])
        run.generated('features_header', 'features.json')
        contacts = features.block('foot_contacts')
        metrics = {'frames': len(features), 'dimension': features.data.shape[1],
                   'n_joints': features.n_joints,
                   'rate': features.rate,
                   'foot_contact_ratio': [float(x) for x in contacts.mean(axis=0)]}
        p.message('Exported {} x {} features'.format(metrics['frames'], metrics['dimension']))
        return run.finish(metrics)

    def contacts(self, session_dir):
        '''
        Find the frames where a hand or foot touches an object part

        Needs the ``poses`` and ``body_calibration`` artifacts. Writes ``contacts.jsonl``.

        Parameters
        ----------
        session_dir : str
            Input session bundle
        '''
        p = self._parent
        run = p.start('contacts', session_dir)
        session = p.load(session_dir)
        records = pipeline.session_contacts(session, p.config)
        session.add_artifact('contacts', records, p.config)
        run.save_session(session, ['contacts'])
        counts = {}
        for r in records:
            c = ContactRecord.from_dict(r)
            key = '{}:{}'.format(c.party, c.object)
            counts[key] = counts.get(key, 0) + 1
        metrics = {'contacts': len(records), 'frames': len({r['frame'] for r in records}),
                   'by_party': dict(sorted(counts.items()))}
        p.message('Found {} contacts'.format(len(records)))
        return run.finish(metrics)
