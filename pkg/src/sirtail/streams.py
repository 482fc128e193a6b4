"""Counter-based random streams keyed by ``(seed, stream id)``.

Every Monte Carlo shard draws from its own Philox stream, so a result
depends only on the seed and the shard layout, never on how many workers
processed the shards.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def stream_rng(seed, *stream):
    """Return a Philox generator for the given seed and stream key.

    Parameters
    ----------
    seed : int
        Non-negative experiment seed.
    *stream : int
        Stream identifier; any tuple of non-negative integers.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(seq))


def shard_sizes(n_samples, shard_size):
    """Split ``n_samples`` into consecutive shard sizes of at most ``shard_size``."""
    n_full, rest = divmod(int(n_samples), int(shard_size))
    sizes = [int(shard_size)] * n_full
    if rest:
        sizes.append(rest)
    return sizes


def map_shards(func, n_samples, seed, stream, shard_size, n_jobs=1):
    """Run ``func(size, rng)`` over all shards and return results in shard order.

    Shard ``k`` uses ``stream_rng(seed, *stream, k)``.  The output is
    independent of ``n_jobs``.
    """
    sizes = shard_sizes(n_samples, shard_size)
    stream = tuple(stream)

    def run(k):
        return func(sizes[k], stream_rng(seed, *stream, k))

    if n_jobs is None or n_jobs <= 1 or len(sizes) <= 1:
        return [run(k) for k in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=int(n_jobs)) as pool:
        return list(pool.map(run, range(len(sizes))))
