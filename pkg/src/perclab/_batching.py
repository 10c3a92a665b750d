"""Replica scheduling: fixed-size stream blocks, optional thread pool.

Replica j always runs on stream base_stream + j, so results are invariant
under the worker count and the block size; reductions happen in block
order with exact integer arithmetic wherever the estimate depends on them.
The jit kernels release the GIL, so threads scale on multicore hosts.
"""

import os
from concurrent.futures import ThreadPoolExecutor

BLOCK = 4096


def default_workers():
    env = os.environ.get("PERCLAB_WORKERS", "").strip()
    if env:
        w = int(env)
        if w < 1:
            raise ValueError("PERCLAB_WORKERS must be >= 1")
        return w
    return min(8, os.cpu_count() or 1)


def iter_blocks(base_stream, replicas, block=BLOCK):
    """Yield (stream_lo, n_rep) covering [base_stream, base_stream+replicas)."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if base_stream < 0 or base_stream + replicas > (1 << 63):
        raise ValueError("stream range out of bounds")
    done = 0
    while done < replicas:
        n = min(block, replicas - done)
        yield base_stream + done, n
        done += n


def run_blocks(worker, base_stream, replicas, workers=None, block=BLOCK):
    """Run worker(stream_lo, n_rep) over all blocks; results in block order."""
    blocks = list(iter_blocks(base_stream, replicas, block))
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(blocks) == 1:
        return [worker(lo, n) for lo, n in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: worker(*b), blocks))
