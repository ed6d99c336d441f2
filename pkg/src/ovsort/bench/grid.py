"""Experiment grids: every cell is timed and verified, trial by trial."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field, fields, replace
from typing import Iterator

import numpy as np

from ..core_sort import BaseSortKind, base_sort
from ..errors import OvsortError, ParameterError, UsageError, VerificationError
from ..keys import KeyBuffer, KeyGenSpec, first_descent, generate, multiset_hash
from ..parallel import ParallelConfig, mc_sort
from ..pipeline import PHASES, SortConfig, run_pipeline, verify_output

log = logging.getLogger(__name__)

ALGOS = ("baseline", "sqdet", "sqran", "mc")
DEFAULT_MAX_N = 8_192_000

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


@dataclass(frozen=True)
class ExperimentSpec:
    """A grid of cells.  ``mc`` runs the randomized pipeline on worker threads."""

    algo: str = "sqran"
    n_list: tuple[int, ...] = (1_024_000,)
    p_list: tuple[int, ...] = (4, 32, 64, 128, 256)
    r_list: tuple[int, ...] = (1,)
    a_list: tuple[float | None, ...] = (None,)
    bases: tuple[BaseSortKind, ...] = (BaseSortKind.QS,)
    threads: tuple[int, ...] = (1,)
    trials: int = 3
    seed: int = 0
    keylen: int = 32
    distribution: str = "uniform-bytes"
    split_strategy: str = "binary-search"
    parallel_merge: bool = False
    max_n: int = DEFAULT_MAX_N

    def __post_init__(self):
        object.__setattr__(self, "bases", tuple(BaseSortKind.parse(b) for b in self.bases))
        if self.algo not in ALGOS:
            raise UsageError(f"algo must be one of {ALGOS}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.keylen < 1:
            raise UsageError("keylen must be >= 1")
        for n in self.n_list:
            if n < 0:
                raise UsageError("n must be >= 0")
            if n > self.max_n:
                raise UsageError(f"n = {n} is above the desk-scale cap {self.max_n}; pass --max-n-override")

    def cells(self) -> Iterator["Cell"]:
        for n in self.n_list:
            for base in self.bases:
                if self.algo == "baseline":
                    yield Cell(n, base)
                    continue
                for p in self.p_list:
                    if self.algo == "sqdet":
                        for r in self.r_list:
                            yield Cell(n, base, p=p, r=r)
                    elif self.algo == "sqran":
                        for a in self.a_list:
                            yield Cell(n, base, p=p, a=a)
                    else:
                        for t in self.threads:
                            for a in self.a_list:
                                yield Cell(n, base, p=p, a=a, threads=t)


@dataclass(frozen=True)
class Cell:
    n: int
    base: BaseSortKind
    p: int | None = None
    r: int | None = None
    a: float | None = None
    threads: int = 1


TIMING_FIELDS = (
    "mean_time",
    "mean_baseline_sort",
    "mean_sample",
    "mean_splitter",
    "mean_split",
    "mean_merge",
)


@dataclass
class ResultRow:
    algo: str
    distribution: str
    n: int
    p: int | None
    r: int | None
    a: float | None
    s: int | None
    base: str
    threads: int
    trials: int
    keylen: int
    seed: int
    mean_time: float = 0.0
    mean_baseline_sort: float = 0.0
    mean_sample: float = 0.0
    mean_splitter: float = 0.0
    mean_split: float = 0.0
    mean_merge: float = 0.0
    max_bucket: int | None = None
    max_expansion: float | None = None
    status: str = PASS
    detail: str = ""

    def without_timings(self) -> "ResultRow":
        return replace(self, **dict.fromkeys(TIMING_FIELDS, 0.0))

    @property
    def failed(self) -> bool:
        return self.status == FAIL


ROW_FIELDS = tuple(f.name for f in fields(ResultRow))


def trial_seed(seed: int, n: int, p: int | None, trial: int) -> int:
    """Independent, reproducible seed for one trial of one cell."""
    ss = np.random.SeedSequence([seed, n, p or 0, trial])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class GridResult:
    rows: list[ResultRow] = field(default_factory=list)
    last_output: KeyBuffer | None = None

    @property
    def all_passed(self) -> bool:
        return not any(r.failed for r in self.rows)


def _check_sorted(X: KeyBuffer, Y: KeyBuffer) -> None:
    if multiset_hash(Y) != multiset_hash(X):
        raise VerificationError("output is not a permutation of the input")
    bad = first_descent(Y)
    if bad >= 0:
        raise VerificationError("output is not nondecreasing", bad)


def _run_baseline(X: KeyBuffer, base: BaseSortKind) -> tuple[KeyBuffer, float]:
    work = X.copy_data()
    t0 = time.perf_counter()
    base_sort(base, work)
    elapsed = time.perf_counter() - t0
    return KeyBuffer(work), elapsed


def run_cell(spec: ExperimentSpec, cell: Cell, source: KeyBuffer | None = None) -> tuple[ResultRow, KeyBuffer | None]:
    """Run ``spec.trials`` verified trials of one cell.

    Inputs come from ``source`` when given, else are generated per trial.
    Timings cover the sort only, never generation or verification.
    """
    n = source.n if source is not None else cell.n
    row = ResultRow(
        algo=spec.algo,
        distribution=spec.distribution if source is None else "file",
        n=n,
        p=cell.p,
        r=cell.r,
        a=cell.a,
        s=None,
        base=cell.base.value,
        threads=cell.threads,
        trials=spec.trials,
        keylen=spec.keylen if source is None else source.keylen,
        seed=spec.seed,
    )
    totals = dict.fromkeys(("total",) + PHASES, 0.0)
    expansions, biggest = [], []
    Y = None
    for trial in range(spec.trials):
        tseed = trial_seed(spec.seed, n, cell.p, trial)
        X = source if source is not None else generate(KeyGenSpec(n, spec.keylen, spec.distribution, tseed))
        try:
            if spec.algo == "baseline":
                Y, elapsed = _run_baseline(X, cell.base)
                _check_sorted(X, Y)
                totals["total"] += elapsed
                totals["baseline_sort"] += elapsed
                continue
            if spec.algo == "sqdet":
                cfg = SortConfig.deterministic(cell.p, cell.r, base=cell.base, split_strategy=spec.split_strategy)
            else:
                cfg = SortConfig.randomized(cell.p, a=cell.a, base=cell.base, split_strategy=spec.split_strategy, seed=tseed)
            if spec.algo == "mc":
                pcfg = ParallelConfig(cell.threads, cfg, parallel_merge=spec.parallel_merge)
                Y, report = mc_sort(X, pcfg)
            else:
                Y, report = run_pipeline(X, cfg)
            verify_output(X, Y, report, cfg)
        except ParameterError as exc:
            row.status, row.detail = SKIPPED, str(exc)
            return row, None
        except VerificationError as exc:
            row.status, row.detail = FAIL, f"trial {trial}: {exc}"
            log.error("cell %s failed: %s", cell, exc)
            return row, None
        except OvsortError as exc:
            row.status, row.detail = FAIL, f"trial {trial}: {type(exc).__name__}: {exc}"
            return row, None
        row.s = report.s
        totals["total"] += report.total_time
        for ph in PHASES:
            totals[ph] += report.timings[ph]
        expansions.append(report.expansion)
        biggest.append(report.max_bucket)

    k = spec.trials
    row.mean_time = totals["total"] / k
    for ph in PHASES:
        setattr(row, f"mean_{ph}", totals[ph] / k)
    if biggest:
        row.max_bucket = int(max(biggest))
        row.max_expansion = float(max(expansions))
    return row, Y


def _warn_if_memory_short(spec: ExperimentSpec, source: KeyBuffer | None) -> None:
    n, L = (source.n, source.keylen) if source is not None else (max(spec.n_list, default=0), spec.keylen)
    # input, working copy, output, plus the reference used in verification
    need = 4 * n * L + 3 * 8 * n
    try:
        avail = os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return
    if need > avail:
        log.warning("grid needs about %.1f GiB, only %.1f GiB free", need / 2**30, avail / 2**30)


def warm_up(spec: ExperimentSpec) -> None:
    """Load the compiled kernels on a tiny input so the first timed cell
    does not pay for it."""
    X = generate(KeyGenSpec(4096, spec.keylen, "uniform-bytes", 0))
    for base in spec.bases:
        _run_baseline(X, base)
        for cfg in (SortConfig.deterministic(4, 1, base=base), SortConfig.randomized(4, s=8, base=base)):
            for strategy in ("binary-search", "merge"):
                run_pipeline(X, replace(cfg, split_strategy=strategy))
            if spec.algo == "mc":
                mc_sort(X, ParallelConfig(2, cfg, parallel_merge=True))


def run_grid(spec: ExperimentSpec, source: KeyBuffer | None = None) -> GridResult:
    """Run every cell; a failing cell is recorded and the grid moves on."""
    result = GridResult()
    _warn_if_memory_short(spec, source)
    warm_up(spec)
    cells = list(spec.cells())
    if source is not None:
        # a fixed input has one size; collapse the n axis
        cells = list(dict.fromkeys(replace(c, n=source.n) for c in cells))
    for cell in cells:
        row, Y = run_cell(spec, cell, source)
        log.info("%s %s -> %s %.3fs", spec.algo, cell, row.status, row.mean_time)
        result.rows.append(row)
        if Y is not None:
            result.last_output = Y
    return result
