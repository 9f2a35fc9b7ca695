"""Optional process-level parallelism for row assembly.

The worker count comes from the CR_FEM_THREADS environment variable
(default 1, i.e. everything runs in the calling process).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

MIN_PARALLEL_ROWS = 200


def worker_count() -> int:
    raw = os.environ.get("CR_FEM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _row(args):
    functional, k = args
    return functional.row(k)


def assemble_rows(functionals: Sequence, k: int) -> list[dict]:
    """functional.row(k) for each functional, in order."""
    workers = worker_count()
    if workers == 1 or len(functionals) < MIN_PARALLEL_ROWS:
        return [f.row(k) for f in functionals]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_row, [(f, k) for f in functionals], chunksize=32))
