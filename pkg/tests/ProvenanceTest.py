import os

from rdflib import Graph, Literal
from rdflib.namespace import PROV, RDF

from mfk.data_trans.common_data import FILE_NS, SCHEMA_NS
from mfk.provenance import TOOL, RunRecord, run_id


INPUTS = {'cameras.json': 'ab' * 32, 'detections.jsonl': 'cd' * 32}


def test_run_id_is_deterministic():
    a = run_id('track-objects', 0, 'h', INPUTS)
    assert a == run_id('track-objects', 0, 'h', dict(reversed(list(INPUTS.items()))))
    assert len(a) == 16
    assert a != run_id('track-objects', 1, 'h', INPUTS)
    assert a != run_id('track-objects', 0, 'g', INPUTS)


def test_record_describes_run():
    rec = RunRecord('track-objects', 2, 'h', INPUTS)
    g = rec.graph
    assert (rec.run, RDF.type, PROV.Activity) in g
    assert (rec.run, PROV.wasAssociatedWith, TOOL) in g
    assert (rec.run, PROV.used, FILE_NS['ab' * 32]) in g
    assert (rec.run, SCHEMA_NS.verb, Literal('track-objects')) in g


def test_generated_artifacts():
    rec = RunRecord('postprocess', 0, 'h', INPUTS)
    art = rec.generated('poses', 'poses.jsonl')
    rec.generated('wrists', 'wrists.jsonl', config_hash='other')
    assert (art, PROV.wasGeneratedBy, rec.run) in rec.graph
    assert (art, PROV.wasDerivedFrom, FILE_NS['cd' * 32]) in rec.graph
    assert (art, SCHEMA_NS.configHash, Literal('h')) in rec.graph
    assert rec.artifacts() == ['poses', 'wrists']


def test_saved_turtle_parses(tempdir):
    rec = RunRecord('contacts', 0, 'h', INPUTS)
    rec.generated('contacts', 'contacts.jsonl')
    path = os.path.join(tempdir, 'provenance.ttl')
    rec.save(path)
    g = Graph()
    g.parse(path, format='turtle')
    assert len(g) == len(rec.graph)
    assert (rec.run, RDF.type, PROV.Activity) in g
