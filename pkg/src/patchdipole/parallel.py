"""Thread fan-out for independent evaluation chunks.

The worker count is ``os.cpu_count()`` capped by ``PATCHDIPOLE_THREADS``.
Results always come back in input order, so output is deterministic.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get("PATCHDIPOLE_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def map_chunks(fn, chunks):
    chunks = list(chunks)
    workers = min(thread_count(), len(chunks))
    if workers <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))
