"""Deterministic parallel map with static chunking.

Results always come back in input index order, so the output does not depend
on the worker count or on completion order.
"""
from __future__ import annotations

import multiprocessing as mp
import os
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from .errors import MVSSError

WORKERS_ENV = "MVSS_WORKERS"


class TaskError(MVSSError):
    """A task in a batch raised; ``index`` names the failing task."""

    def __init__(self, index: int, cause: BaseException | str):
        self.index = index
        self.cause = cause
        super().__init__(f"task {index} failed: {cause!r}")


@dataclass(frozen=True)
class TaskBatch:
    tasks: tuple
    workers: int = 1

    def __len__(self) -> int:
        return len(self.tasks)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def chunk_bounds(n: int, w: int) -> list[tuple[int, int]]:
    """Split range(n) into at most w contiguous chunks of near-equal size."""
    w = max(1, min(w, n)) if n else 1
    base, extra = divmod(n, w)
    out, start = [], 0
    for k in range(w):
        size = base + (1 if k < extra else 0)
        out.append((start, start + size))
        start += size
    return out


def _run_chunk(fn: Callable, start: int, items: Sequence, timed: bool):
    out = []
    for k, item in enumerate(items):
        t0 = time.perf_counter()
        try:
            res = fn(item)
        except Exception as exc:  # noqa: BLE001 - reported with its index
            return ("err", start + k, repr(exc), exc if _picklable(exc) else None)
        out.append((res, time.perf_counter() - t0) if timed else res)
    return ("ok", out)


def _picklable(exc) -> bool:
    import pickle

    try:
        pickle.dumps(exc)
        return True
    except Exception:  # noqa: BLE001
        return False


def _pool(backend: str, workers: int):
    if backend == "thread":
        return ThreadPoolExecutor(max_workers=workers)
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    return ProcessPoolExecutor(max_workers=workers, mp_context=ctx)


def parallel_map_deterministic(fn: Callable[[Any], Any], items: Sequence | TaskBatch, workers: int | None = None,
                               backend: str = "process", timed: bool = False) -> list:
    """Map fn over items with static chunking; results are in index order.

    With ``timed`` each result becomes (value, seconds spent in fn).
    A failing task raises TaskError naming its index.
    """
    if isinstance(items, TaskBatch):
        workers = items.workers if workers is None else workers
        items = items.tasks
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if backend not in ("process", "thread"):
        raise ValueError(f"unknown backend {backend!r}")
    if not items:
        return []
    bounds = chunk_bounds(len(items), workers)
    if workers == 1 or len(bounds) == 1:
        chunks = [_run_chunk(fn, 0, items, timed)]
    else:
        with _pool(backend, len(bounds)) as ex:
            futs = [ex.submit(_run_chunk, fn, a, items[a:b], timed) for a, b in bounds]
            chunks = [f.result() for f in futs]
    out = []
    for ch in chunks:
        if ch[0] == "err":
            _, idx, msg, exc = ch
            err = TaskError(idx, exc if exc is not None else msg)
            raise err from (exc if isinstance(exc, BaseException) else None)
        out.extend(ch[1])
    return out
