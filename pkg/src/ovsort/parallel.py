"""Multi-core variant: the ``p`` baseline sorts become tasks for ``t`` threads.

The compiled kernels and numpy's sorts release the GIL, so plain threads
give real parallelism.  Workers pull tasks from the executor's shared queue;
each task owns a disjoint span, so no locking is needed on the data.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import ParameterError
from .keys import KeyBuffer
from .pipeline import SortConfig, SortReport, run_pipeline


@dataclass(frozen=True)
class ParallelConfig:
    t: int
    inner: SortConfig
    parallel_merge: bool = False  # the merge phase stays serial unless asked

    def __post_init__(self):
        if self.t < 1:
            raise ParameterError("need at least one worker thread")
        if self.t > self.inner.p:
            raise ParameterError(f"t = {self.t} threads exceed p = {self.inner.p} sequences")


def mc_sort(X: KeyBuffer, pcfg: ParallelConfig) -> tuple[KeyBuffer, SortReport]:
    """Same output as the sequential pipeline for ``pcfg.inner``, computed
    with ``pcfg.t`` worker threads."""
    with ThreadPoolExecutor(max_workers=pcfg.t, thread_name_prefix="ovsort") as pool:
        return run_pipeline(X, pcfg.inner, executor=pool, parallel_merge=pcfg.parallel_merge, threads=pcfg.t)
