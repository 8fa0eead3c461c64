import os
import hashlib


def worker_count(workers=None):
    ''' Thread pool size: an explicit count, else ``MFK_THREADS``, else the CPU count '''
    if workers:
        return int(workers)
    env = os.environ.get('MFK_THREADS')
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def file_digest(path, block_size=1 << 16):
    ''' sha256 hex digest of a file '''
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(block_size), b''):
            h.update(block)
    return h.hexdigest()


def parse_int_list(s):
    ''' Parse ``'4,7,10'`` into ``[4, 7, 10]`` '''
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).split(',') if x.strip()]


def parse_list(s):
    ''' Parse ``'box,laptop'`` into ``['box', 'laptop']`` '''
    if isinstance(s, (list, tuple)):
        return [str(x) for x in s]
    return [x.strip() for x in str(s).split(',') if x.strip()]
