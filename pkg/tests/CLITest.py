import io
import json
import os

import pytest

from mfk.cli import build_parser, main
from mfk.command import METRICS, PROVENANCE


GEN = ['gen-synthetic', '--cameras', '6', '--frames', '6', '--objects', 'box,drawer']


def run(argv):
    out = io.StringIO()
    status = main(argv, output=out)
    return status, out.getvalue()


def top_level_files(directory):
    out = {}
    for name in sorted(os.listdir(directory)):
        path = os.path.join(directory, name)
        if os.path.isfile(path) and name != PROVENANCE:
            with open(path, 'rb') as f:
                out[name] = f.read()
    return out


def test_parser_defaults():
    args = build_parser().parse_args(['--out', 'x', 'simulate', 'occlusion'])
    assert args.markers == [4, 7, 10, 20, 40]
    assert args.cameras == 70
    assert args.seed == 0


def test_parser_needs_out():
    with pytest.raises(SystemExit):
        build_parser().parse_args(['gen-synthetic'])


@pytest.mark.inttest
def test_gen_synthetic_is_reproducible(tempdir):
    first = os.path.join(tempdir, 'a')
    second = os.path.join(tempdir, 'b')
    status, message = run(['--seed', '3', '--out', first] + GEN + ['--no-hands'])
    assert status == 0
    assert 'detections' in message
    assert run(['--seed', '3', '--out', second] + GEN + ['--no-hands'])[0] == 0
    assert top_level_files(first) == top_level_files(second)
    with open(os.path.join(first, METRICS)) as f:
        metrics = json.load(f)
    assert metrics['verb'] == 'gen-synthetic'
    assert metrics['seed'] == 3
    assert metrics['metrics']['frames'] == 6
    assert os.path.exists(os.path.join(first, PROVENANCE))


@pytest.mark.inttest
def test_output_must_differ_from_input(tempdir, capsys):
    assert run(['--out', tempdir] + GEN + ['--no-hands'])[0] == 0
    capsys.readouterr()
    assert run(['--out', tempdir, 'track-objects', tempdir])[0] == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err['error'] == 'invalid_spec'


def test_missing_session(tempdir, capsys):
    status, _ = run(['--out', os.path.join(tempdir, 'out'), 'track-objects', os.path.join(tempdir, 'absent')])
    assert status == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])['error'] == 'invalid_spec'


def test_bad_scene(tempdir, capsys):
    status, _ = run(['--out', tempdir, 'gen-synthetic', '--cameras', '1'])
    assert status == 2


@pytest.mark.inttest
@pytest.mark.slow
def test_solver_failure_exit_status(tempdir, capsys):
    session = os.path.join(tempdir, 'session')
    conf = os.path.join(tempdir, 'strict.conf')
    with open(conf, 'w') as f:
        json.dump({'hand.iterations': 2, 'hand.max_residual': 1e-9}, f)
    assert run(['--out', session] + GEN)[0] == 0
    capsys.readouterr()
    status, _ = run(['--config', conf, '--out', os.path.join(tempdir, 'hand'), 'calibrate-hand', session,
                     '--side', 'left'])
    assert status == 3
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])['error'] == 'non_convergence'


def run_pipeline(directory, conf):
    stages = [('gen', ['gen-synthetic', '--cameras', '8', '--frames', '12', '--objects', 'box,drawer', '--no-hands'],
               None),
              ('tracked', ['track-objects'], 'gen'),
              ('body', ['calibrate-body'], 'tracked'),
              ('post', ['postprocess'], 'body'),
              ('features', ['export-features'], 'post'),
              ('contacts', ['contacts'], 'post')]
    for name, verb, source in stages:
        argv = ['--seed', '2', '--config', conf, '--out', os.path.join(directory, name)] + verb
        if source is not None:
            argv.append(os.path.join(directory, source))
        assert run(argv)[0] == 0, name
    return [name for name, _, _ in stages]


@pytest.mark.inttest
@pytest.mark.slow
def test_pipeline_metrics_are_reproducible(tempdir):
    conf = os.path.join(tempdir, 'quick.conf')
    with open(conf, 'w') as f:
        json.dump({'body.epochs': 3}, f)
    first = os.path.join(tempdir, 'a')
    second = os.path.join(tempdir, 'b')
    names = run_pipeline(first, conf)
    run_pipeline(second, conf)
    for name in names:
        with open(os.path.join(first, name, METRICS), 'rb') as a, open(os.path.join(second, name, METRICS), 'rb') as b:
            assert a.read() == b.read(), name
    with open(os.path.join(first, 'features', METRICS)) as f:
        assert json.load(f)['metrics']['rate'] == 30.0
