"""Deterministic thread mapping over independent work items.

Results are returned in input order, so output never depends on the worker
count; workers only pay off when the mapped function releases the GIL (the
numba kernels do).
"""

from concurrent.futures import ThreadPoolExecutor


def thread_map(fn, items, threads=1):
    items = list(items)
    if threads is None:
        threads = 1
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
