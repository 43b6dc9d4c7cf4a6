"""Worker-pool helper with worker-count-independent chunking.

Work is always split into chunks of a fixed size; the worker count only
controls how many chunks run concurrently.  Every output element is
produced by exactly one chunk, so results are bit-identical at any worker
count.
"""

import os
import threading
from concurrent.futures import ThreadPoolExecutor

__all__ = ["map_chunks", "default_workers", "LAPACK_LOCK"]

# scipy's LAPACK wrappers (lu_solve and friends) corrupt the heap when
# entered from several threads at once with this OpenBLAS build; elementwise
# ufuncs and matmul are fine.  All LAPACK entry points take this lock.
LAPACK_LOCK = threading.Lock()


def default_workers() -> int:
    env = os.environ.get("PLATEWAVE_WORKERS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def map_chunks(func, items, chunk_size: int, workers: int = 1):
    """Apply func to fixed-size slices of items, in order."""
    chunks = [items[i:i + chunk_size] for i in range(0, len(items), chunk_size)]
    if workers <= 1 or len(chunks) <= 1:
        return [func(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, chunks))
