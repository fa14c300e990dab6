"""Seeded replication harness shared by experiments and studies."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, MutableMapping, TypeVar

import numpy as np

LOGGER = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def derive_seed(master: int, *index: int) -> int:
    """64-bit seed of replication ``index`` under ``master``.

    Uses ``SeedSequence`` spawn keys, so streams for different indices are
    independent and do not depend on the order replications are scheduled.
    """
    sequence = np.random.SeedSequence(int(master), spawn_key=tuple(int(i) for i in index))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def run_replications(task: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """Apply ``task`` to every item, in item order.

    With ``workers > 1`` items are distributed over a process pool; ``task``
    must then be a picklable module-level callable.
    """
    work = list(items)
    if workers <= 1 or len(work) < 2:
        return [task(item) for item in work]
    chunksize = max(1, len(work) // (workers * 8))
    LOGGER.debug("Running %d replications on %d workers (chunksize %d)", len(work), workers, chunksize)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(task, work, chunksize=chunksize))


@contextmanager
def stopwatch(timings: MutableMapping[str, float], label: str) -> Iterator[None]:
    """Add the wall-clock seconds spent in the block to ``timings[label]``."""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[label] = timings.get(label, 0.0) + time.perf_counter() - start
