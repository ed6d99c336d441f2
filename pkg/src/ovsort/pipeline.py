"""Sample-partitioned sorting: baseline sort, partition, merge.

Both modes run the same five phases:

1. split the input into ``p`` contiguous sequences and base-sort each;
2. draw a sample (regular per sequence, or uniform over all keys);
3. pick ``p - 1`` splitters at ranks ``i * s`` of the sorted sample;
4. cut every sorted sequence around the splitters;
5. p-way merge the ``j``-th piece of every sequence into bucket ``j``.

The buckets are written back to back into a fresh output buffer.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import Executor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core_sort import BaseSortKind, base_sort, new_counter
from .errors import ParameterError, VerificationError
from .keys import KeyBuffer, first_descent, multiset_hash, sequence_bounds
from .partition import (
    SPLIT_STRATEGIES,
    BalanceBound,
    PartitionPlan,
    RandomSampleParams,
    RegularSampleParams,
    SplitterSet,
    TaggedSamples,
    check_balance,
    default_oversampling,
    merge_samples,
    random_sample,
    regular_sample,
    select_splitters,
    split_around,
)

log = logging.getLogger(__name__)

DETERMINISTIC = "deterministic"
RANDOMIZED = "randomized"
PHASES = ("baseline_sort", "sample", "splitter", "split", "merge")


@dataclass(frozen=True)
class SortConfig:
    p: int
    mode: str = RANDOMIZED
    r: int = 1
    s: int | None = None
    a: float | None = None
    base: BaseSortKind = BaseSortKind.QS
    split_strategy: str = "binary-search"
    seed: int = 0
    stable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "base", BaseSortKind.parse(self.base))
        if self.mode not in (DETERMINISTIC, RANDOMIZED):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.p < 1:
            raise ParameterError("p must be >= 1")
        if self.r < 1:
            raise ParameterError("r must be >= 1")
        if self.s is not None and self.a is not None:
            raise ParameterError("give either s or a, not both")
        if self.s is not None and self.s < 1:
            raise ParameterError("s must be >= 1")
        if self.split_strategy not in SPLIT_STRATEGIES:
            raise ParameterError(f"split strategy must be one of {SPLIT_STRATEGIES}")
        if self.stable and not self.base.is_stable:
            raise ParameterError(f"stable sorting requested but base sort {self.base.value!r} is not stable")

    @classmethod
    def deterministic(cls, p: int, r: int = 1, **kw) -> "SortConfig":
        return cls(p=p, mode=DETERMINISTIC, r=r, **kw)

    @classmethod
    def randomized(cls, p: int, s: int | None = None, a: float | None = None, **kw) -> "SortConfig":
        return cls(p=p, mode=RANDOMIZED, s=s, a=a, **kw)

    def oversampling(self, n: int) -> int:
        """Per-splitter oversampling factor for an input of ``n`` keys."""
        if self.mode == DETERMINISTIC:
            return self.r * self.p
        if self.s is not None:
            return self.s
        return default_oversampling(n, self.a)

    def validate(self, n: int) -> None:
        # p = 1 skips sampling, so sample-size limits do not apply
        if n == 0 or self.p == 1:
            return
        if self.p > n:
            raise ParameterError(f"p = {self.p} exceeds n = {n}")
        if self.mode == DETERMINISTIC:
            RegularSampleParams(self.p, self.r).validate(n)
        else:
            RandomSampleParams(self.p, self.oversampling(n)).validate(n)


@dataclass
class SortReport:
    n: int
    p: int
    mode: str
    s: int | None
    timings: dict[str, float] = field(default_factory=lambda: dict.fromkeys(PHASES, 0.0))
    bucket_sizes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    comparisons: dict[str, int | None] = field(default_factory=dict)
    order: np.ndarray | None = None
    plan: PartitionPlan | None = None
    sample: TaggedSamples | None = None
    splitters: SplitterSet | None = None
    threads: int = 1

    @property
    def total_time(self) -> float:
        return float(sum(self.timings.values()))

    @property
    def max_bucket(self) -> int:
        return int(self.bucket_sizes.max()) if len(self.bucket_sizes) else 0

    @property
    def expansion(self) -> float:
        """``max_j |Y_j| / (n/p)``."""
        if self.n == 0:
            return 1.0
        return self.max_bucket * self.p / self.n


def _sum_counters(counters, enabled: bool) -> int | None:
    return int(sum(c[0] for c in counters)) if enabled else None


def run_pipeline(
    X: KeyBuffer,
    cfg: SortConfig,
    executor: Executor | None = None,
    parallel_merge: bool = False,
    threads: int = 1,
) -> tuple[KeyBuffer, SortReport]:
    """Shared driver for the sequential and multi-core entry points.

    With an ``executor``, the ``p`` baseline sorts (and, if
    ``parallel_merge``, the ``p`` bucket merges) become tasks on it.  Results
    do not depend on how tasks are scheduled.
    """
    n, L, p = X.n, X.keylen, cfg.p
    cfg.validate(n)
    s = cfg.oversampling(n) if p > 1 else None
    report = SortReport(n=n, p=p, mode=cfg.mode, s=s, threads=threads)
    if n == 0:
        report.order = np.empty(0, dtype=np.int64)
        report.bucket_sizes = np.zeros(p, dtype=np.int64)
        return KeyBuffer.empty(L), report

    counting = cfg.base.counts_comparisons
    work = X.copy_data()
    perm = np.arange(n, dtype=np.int64)
    seq = sequence_bounds(n, p)
    timings = report.timings

    # 1. baseline sorting
    t0 = time.perf_counter()
    base_counters = [new_counter() for _ in range(p)]

    def sort_seq(k: int) -> None:
        lo, hi = seq[k], seq[k + 1]
        base_sort(cfg.base, work[lo:hi], perm[lo:hi], base_counters[k])

    if executor is None:
        for k in range(p):
            sort_seq(k)
    else:
        for fut in [executor.submit(sort_seq, k) for k in range(p)]:
            fut.result()
    timings["baseline_sort"] = time.perf_counter() - t0
    report.comparisons["baseline_sort"] = _sum_counters(base_counters, counting)

    if p == 1:
        report.bucket_sizes = np.array([n], dtype=np.int64)
        report.order = perm
        report.comparisons["merge"] = 0
        report.plan = PartitionPlan(np.array([[0, n]], dtype=np.int64))
        return KeyBuffer(work), report

    # 2. sample selection
    t0 = time.perf_counter()
    if cfg.mode == DETERMINISTIC:
        params = RegularSampleParams(p, cfg.r)
        T = merge_samples([regular_sample(work[seq[k] : seq[k + 1]], k, params, n) for k in range(p)])
    else:
        T = random_sample(work, seq, RandomSampleParams(p, s), np.random.default_rng(cfg.seed), cfg.base)
    timings["sample"] = time.perf_counter() - t0

    # 3. splitter selection
    t0 = time.perf_counter()
    splitters = select_splitters(T, p, s)
    timings["splitter"] = time.perf_counter() - t0
    report.sample, report.splitters = T, splitters

    # 4. split every sorted sequence around the splitters
    t0 = time.perf_counter()
    split_counter = new_counter()
    bounds = np.empty((p, p + 1), dtype=np.int64)
    for k in range(p):
        bounds[k] = split_around(work[seq[k] : seq[k + 1]], k, splitters, cfg.split_strategy, split_counter)
    plan = PartitionPlan(bounds)
    timings["split"] = time.perf_counter() - t0
    report.comparisons["split"] = int(split_counter[0])

    # 5. merge bucket j from the j-th piece of every sequence
    t0 = time.perf_counter()
    out = np.empty_like(work)
    out_perm = np.empty_like(perm)
    offsets = plan.bucket_offsets()
    if executor is not None and parallel_merge:
        merge_counters = [new_counter() for _ in range(p)]
        futs = [
            executor.submit(
                _kernels.merge_buckets, work, perm, seq, bounds, out, out_perm, offsets, j, j + 1, merge_counters[j]
            )
            for j in range(p)
        ]
        for fut in futs:
            fut.result()
    else:
        merge_counters = [new_counter()]
        _kernels.merge_buckets(work, perm, seq, bounds, out, out_perm, offsets, 0, p, merge_counters[0])
    timings["merge"] = time.perf_counter() - t0
    report.comparisons["merge"] = _sum_counters(merge_counters, True)

    report.plan = plan
    report.bucket_sizes = plan.bucket_sizes()
    report.order = out_perm
    return KeyBuffer(out), report


def sq_det(X: KeyBuffer, cfg: SortConfig) -> tuple[KeyBuffer, SortReport]:
    """Sort with deterministic regular oversampling."""
    if cfg.mode != DETERMINISTIC:
        raise ParameterError("sq_det needs a deterministic SortConfig")
    return run_pipeline(X, cfg)


def sq_ran(X: KeyBuffer, cfg: SortConfig) -> tuple[KeyBuffer, SortReport]:
    """Sort with random oversampling."""
    if cfg.mode != RANDOMIZED:
        raise ParameterError("sq_ran needs a randomized SortConfig")
    return run_pipeline(X, cfg)


def sort(X: KeyBuffer, cfg: SortConfig) -> tuple[KeyBuffer, SortReport]:
    return run_pipeline(X, cfg)


def verify_output(X: KeyBuffer, Y: KeyBuffer, report: SortReport, cfg: SortConfig) -> None:
    """Raise :class:`VerificationError` unless ``Y`` is a valid sort of ``X``."""
    if Y.n != X.n or Y.keylen != X.keylen:
        raise VerificationError(f"output shape {Y.data.shape} != input shape {X.data.shape}")
    if multiset_hash(Y) != multiset_hash(X):
        raise VerificationError("output is not a permutation of the input (multiset hash differs)")
    bad = first_descent(Y)
    if bad >= 0:
        raise VerificationError("output is not nondecreasing", bad)
    order = report.order
    if order is not None and X.n:
        if not np.array_equal(np.sort(order), np.arange(X.n)):
            raise VerificationError("reported order is not a permutation")
        mismatch = np.flatnonzero((X.data[order] != Y.data).any(axis=1))
        if len(mismatch):
            raise VerificationError("reported order does not reproduce the output", int(mismatch[0]))
        if cfg.stable:
            same = (Y.data[1:] == Y.data[:-1]).all(axis=1)
            unstable = np.flatnonzero(same & (order[1:] < order[:-1]))
            if len(unstable):
                raise VerificationError("equal keys lost their input order", int(unstable[0]))
    if cfg.mode == DETERMINISTIC and cfg.p > 1 and X.n:
        bound = BalanceBound(X.n, cfg.p, cfg.r)
        if bound.applies:
            bal = check_balance(report.plan, bound)
            if not bal.passed:
                j = int(np.argmax(bal.sizes > bal.limit))
                raise VerificationError(f"bucket {j} holds {bal.sizes[j]} keys, bound is {bal.limit}", j)
        else:
            log.info("balance bound not asserted: r^2 p^2 > n (n=%d p=%d r=%d)", X.n, cfg.p, cfg.r)


def sort_with_oracle_check(X: KeyBuffer, cfg: SortConfig) -> SortReport:
    """Run the configured pipeline and verify its output."""
    Y, report = run_pipeline(X, cfg)
    verify_output(X, Y, report, cfg)
    return report
