import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    """Worker cap from ``SSFLAB_THREADS`` (default 1)."""
    raw = os.environ.get("SSFLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ordered_map(func, items):
    """Map preserving input order; results never depend on scheduling."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
