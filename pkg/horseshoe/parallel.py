"""
The single parallel-for of the toolkit.

Work functions must be module level callables (they are pickled) and pure:
every result goes to its own slot of the returned list, so output does not
depend on the number of workers.
"""

import logging
import multiprocessing as mp

from . import conf


logger = logging.getLogger(__name__)


def parallel_map(func, items, threads=None):
    """
    Order preserving map of *func* over *items*.

    :param callable func: picklable function of one argument
    :param items: sequence of work items
    :param int threads: worker count, ``None`` reads ``HORSESHOE_THREADS``
    :return: list of results in the order of *items*
    """
    items = list(items)
    if threads is None:
        threads = conf.get('THREADS')
    threads = min(int(threads), len(items))
    if threads <= 1:
        return [func(item) for item in items]
    logger.debug('mapping %d chunks on %d workers', len(items), threads)
    with mp.Pool(threads) as pool:
        return pool.map(func, items)


def chunked(n, count):
    """
    Split ``range(n)`` into at most *count* contiguous ``(start, stop)`` pairs.
    """
    count = max(1, min(int(count), n))
    bounds = [n * i // count for i in range(count + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(count) if bounds[i] < bounds[i + 1]]
