'''
Provenance of command runs

Each run of a command is described with the W3C PROV vocabulary: the run is a
``prov:Activity`` associated with the tool, it ``prov:used`` its input files and every
artifact it wrote ``prov:wasGeneratedBy`` it. Identifiers derive from content digests so the
same run always gives the same graph.
'''
import hashlib
import json
import logging

from rdflib import Graph, Literal, URIRef
from rdflib.namespace import PROV, RDF, RDFS, XSD

from . import __version__
from .data_trans.common_data import ARTIFACT_NS, FILE_NS, RUN_NS, SCHEMA_NS

L = logging.getLogger(__name__)

TOOL = URIRef(SCHEMA_NS['tool/mfk-' + __version__])


def run_id(verb, seed, config_hash, inputs):
    '''
    Digest identifying a run by what determines its outputs

    Parameters
    ----------
    verb : str
    seed : int
    config_hash : str
    inputs : dict
        Input file name to sha256 digest
    '''
    canon = json.dumps({'verb': verb, 'seed': seed, 'config': config_hash, 'inputs': inputs},
                       sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canon.encode('utf-8')).hexdigest()[:16]


class RunRecord(object):
    '''
    Accumulates the provenance of one command run

    Parameters
    ----------
    verb : str
    seed : int
    config_hash : str
    inputs : dict
        Input file name to sha256 digest
    '''

    def __init__(self, verb, seed, config_hash, inputs):
        self.verb = verb
        self.seed = seed
        self.config_hash = config_hash
        self.inputs = dict(inputs)
        self.id = run_id(verb, seed, config_hash, self.inputs)
        self.run = RUN_NS[self.id]
        self.graph = Graph()
        self.graph.bind('prov', PROV)
        self.graph.bind('mfk', SCHEMA_NS)
        self.graph.bind('run', RUN_NS)
        self.graph.bind('artifact', ARTIFACT_NS)
        self.graph.bind('file', FILE_NS)
        self._describe()

    def _describe(self):
        g = self.graph
        g.add((TOOL, RDF.type, PROV.SoftwareAgent))
        g.add((TOOL, RDFS.label, Literal('mfk ' + __version__)))
        g.add((self.run, RDF.type, PROV.Activity))
        g.add((self.run, PROV.wasAssociatedWith, TOOL))
        g.add((self.run, SCHEMA_NS.verb, Literal(self.verb)))
        g.add((self.run, SCHEMA_NS.seed, Literal(self.seed, datatype=XSD.integer)))
        g.add((self.run, SCHEMA_NS.configHash, Literal(self.config_hash)))
        for name, digest in sorted(self.inputs.items()):
            f = FILE_NS[digest]
            g.add((f, RDF.type, PROV.Entity))
            g.add((f, SCHEMA_NS.fileName, Literal(name)))
            g.add((f, SCHEMA_NS.sha256, Literal(digest)))
            g.add((self.run, PROV.used, f))

    def generated(self, kind, file_name, config_hash=None):
        '''
        Record an artifact written by the run

        Returns
        -------
        rdflib.term.URIRef
        '''
        art = ARTIFACT_NS['{}/{}'.format(self.id, kind)]
        g = self.graph
        g.add((art, RDF.type, PROV.Entity))
        g.add((art, PROV.wasGeneratedBy, self.run))
        g.add((art, SCHEMA_NS.kind, Literal(kind)))
        g.add((art, SCHEMA_NS.fileName, Literal(file_name)))
        g.add((art, SCHEMA_NS.configHash, Literal(config_hash or self.config_hash)))
        for name, digest in self.inputs.items():
            g.add((art, PROV.wasDerivedFrom, FILE_NS[digest]))
        return art

    def artifacts(self):
        ''' Kinds of the artifacts recorded so far '''
        return sorted(str(o) for o in self.graph.objects(None, SCHEMA_NS.kind))

    def save(self, path):
        self.graph.serialize(destination=path, format='turtle')
        L.debug('Wrote provenance of run %s to %s', self.id, path)
