"""Property battery shared by ``--verify-only`` and the acceptance tests.

Every check returns a :class:`CheckResult`; none of them raise on a failed
property.  ``soft`` marks results that are reported but must never fail a
run (timing trends that depend on the machine).
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ..core_sort import BaseSortKind, MergeRun, base_sort, multiway_merge, new_counter
from ..errors import ParameterError
from ..keys import KeyBuffer, KeyGenSpec, generate, sequence_bounds
from ..parallel import ParallelConfig, mc_sort
from ..partition import BalanceBound, TaggedSamples, check_balance, default_oversampling
from ..pipeline import SortConfig, SortReport, run_pipeline

ALL_BASES = tuple(BaseSortKind)
GRID_DISTRIBUTIONS = ("uniform-bytes", "sorted", "reverse-sorted", "constant", "few-distinct(4)")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    soft: bool = False

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        if self.soft:
            verdict += " (soft)"
        return f"{verdict:16s} {self.name}: {self.detail} [{self.seconds:.1f}s]"


def _timed(fn: Callable[..., CheckResult]) -> Callable[..., CheckResult]:
    def wrapper(*args, **kw) -> CheckResult:
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _seed(*parts: int | str) -> int:
    ints = [p if isinstance(p, int) else int.from_bytes(p.encode()[:8].ljust(8, b"\0"), "little") for p in parts]
    return int(np.random.SeedSequence(ints).generate_state(1, np.uint64)[0])


def reference_sort(X: KeyBuffer) -> tuple[np.ndarray, np.ndarray]:
    """Stable reference: sorted keys and the source index of every output key."""
    if X.n == 0:
        return X.data.copy(), np.empty(0, dtype=np.int64)
    order = np.argsort(X.as_strings(), kind="stable")
    return X.data[order], order


def _mode_configs(p: int, base: BaseSortKind, rs: Sequence[int], seed: int) -> list[SortConfig]:
    cfgs = [SortConfig.deterministic(p, r, base=base) for r in rs]
    cfgs.append(SortConfig.randomized(p, base=base, seed=seed))
    return cfgs


def _describe(cfg: SortConfig) -> str:
    mode = f"det(r={cfg.r})" if cfg.mode == "deterministic" else "ran"
    return f"p={cfg.p} {mode} base={cfg.base.value}"


# --------------------------------------------------------------------------
# correctness oracle


@_timed
def correctness_grid(
    ns: Iterable[int] = (0, 1, 1000, 100_000, 1_000_000),
    distributions: Iterable[str] = GRID_DISTRIBUTIONS,
    ps: Iterable[int] = (1, 2, 4, 32, 64, 256),
    rs: Sequence[int] = (1, 2, 3),
    bases: Iterable[BaseSortKind] = ALL_BASES,
    time_limit: float | None = 300.0,
) -> CheckResult:
    """Pipeline output equals the stable reference sort, key for key.

    For the stable base the reported source order must also equal the
    reference order.  Configurations invalid for ``n`` are counted, not run.
    """
    t0 = time.perf_counter()
    runs = skipped = 0
    failures: list[str] = []
    for dist in distributions:
        for n in ns:
            X = generate(KeyGenSpec(n, 32, dist, _seed("grid", dist, n)))
            want, want_order = reference_sort(X)
            for p in ps:
                for base in bases:
                    for cfg in _mode_configs(p, base, rs, _seed("ran", dist, n, p)):
                        try:
                            Y, report = run_pipeline(X, cfg)
                        except ParameterError:
                            skipped += 1
                            continue
                        runs += 1
                        tag = f"{dist} n={n} {_describe(cfg)}"
                        if not np.array_equal(Y.data, want):
                            failures.append(f"{tag}: keys differ from reference")
                        elif not np.array_equal(X.data[report.order], Y.data):
                            failures.append(f"{tag}: reported order does not reproduce output")
                        elif base.is_stable and not np.array_equal(report.order, want_order):
                            failures.append(f"{tag}: not stable")
                        elif report.bucket_sizes.sum() != n:
                            failures.append(f"{tag}: bucket sizes do not add up to n")
                        if p == 1:
                            # the mode is irrelevant without sampling; one run per base is enough
                            break
    elapsed = time.perf_counter() - t0
    slow = time_limit is not None and elapsed > time_limit
    detail = f"{runs} runs, {len(failures)} failures, {skipped} invalid configs skipped, {elapsed:.0f}s"
    if slow:
        detail += f" (over the {time_limit:.0f}s budget)"
    if failures:
        detail += "; first: " + failures[0]
    return CheckResult("correctness oracle", not failures and not slow, detail)


# --------------------------------------------------------------------------
# deterministic balance bound


def lemma_configs(count: int = 600, seed: int = 0) -> list[tuple[str, int, int, int]]:
    """``(distribution, n, p, r)`` with ``r^2 p^2 <= n``, biased toward the
    smallest admissible ``n`` where the bound is tightest."""
    rng = np.random.default_rng(seed)
    dists = ("uniform-bytes", "sorted", "reverse-sorted", "constant", "few-distinct(2)", "few-distinct(17)")
    out = []
    while len(out) < count:
        p = int(rng.choice([2, 3, 4, 5, 8, 13, 16, 32, 64]))
        r = int(rng.integers(1, 4))
        lo = r * r * p * p
        n = lo + int(rng.integers(0, max(2, min(lo, 40_000))))
        out.append((str(rng.choice(dists)), n, p, r))
    return out


@_timed
def lemma_bound(count: int = 600, seed: int = 0) -> CheckResult:
    """Every deterministic bucket is at most ``ceil((1 + 1/r) n/p + r p)``."""
    violations: list[str] = []
    for i, (dist, n, p, r) in enumerate(lemma_configs(count, seed)):
        X = generate(KeyGenSpec(n, 8, dist, _seed("lemma", i)))
        cfg = SortConfig.deterministic(p, r, base=ALL_BASES[i % len(ALL_BASES)])
        _, report = run_pipeline(X, cfg)
        bound = BalanceBound(n, p, r)
        bal = check_balance(report.plan, bound)
        if not bal.passed:
            violations.append(f"{dist} n={n} p={p} r={r}: max bucket {bal.max_size} > {bal.limit}")
    detail = f"{count} runs, {len(violations)} violations"
    if violations:
        detail += "; first: " + violations[0]
    return CheckResult("deterministic bucket bound", not violations, detail)


# --------------------------------------------------------------------------
# randomized concentration


@_timed
def claim_concentration(n: int = 100_000, p: int = 16, trials: int = 100, allowed: int = 5) -> CheckResult:
    """Few seeded trials put more than ``1.5 (n - p + 1)/p`` keys in a bucket."""
    s = default_oversampling(n)
    limit = 1.5 * (n - p + 1) / p
    bad = 0
    worst = 0.0
    for t in range(trials):
        X = generate(KeyGenSpec(n, 32, "uniform-bytes", _seed("claim", t)))
        _, report = run_pipeline(X, SortConfig.randomized(p, s=s, seed=_seed("claim-sample", t)))
        worst = max(worst, report.max_bucket / ((n - p + 1) / p))
        bad += int(report.max_bucket > limit)
    detail = f"{bad}/{trials} trials over 1.5x (allowed {allowed}); s={s}, worst ratio {worst:.3f}"
    return CheckResult("randomized bucket concentration", bad <= allowed, detail)


# --------------------------------------------------------------------------
# stability


@_timed
def stability(n: int = 100_000, ps: Iterable[int] = (4, 64, 256), distinct: int = 4) -> CheckResult:
    """With the stable base, equal keys leave in input order (source index as payload)."""
    X = generate(KeyGenSpec(n, 32, f"few-distinct({distinct})", _seed("stable", n)))
    _, want_order = reference_sort(X)
    runs, failures, skipped = 0, [], []
    for p in ps:
        cfgs = [
            SortConfig.deterministic(p, 1, base=BaseSortKind.REF, stable=True),
            SortConfig.randomized(p, base=BaseSortKind.REF, stable=True, seed=_seed("stable", p)),
        ]
        for cfg in cfgs:
            try:
                Y, report = run_pipeline(X, cfg)
            except ParameterError:
                skipped.append(_describe(cfg))
                continue
            runs += 1
            same = (Y.data[1:] == Y.data[:-1]).all(axis=1)
            inverted = np.flatnonzero(same & (report.order[1:] < report.order[:-1]))
            if len(inverted) or not np.array_equal(report.order, want_order):
                failures.append(f"{_describe(cfg)}: payload order broken at {inverted[:1].tolist()}")
    detail = f"{runs} runs over p={list(ps)}, {len(failures)} failures"
    if skipped:
        detail += f"; not valid at n={n}: {', '.join(skipped)}"
    if failures:
        detail += "; first: " + failures[0]
    return CheckResult("end-to-end stability", runs > 0 and not failures, detail)


# --------------------------------------------------------------------------
# merge cost


@_timed
def merge_cost(n: int = 100_000, p: int = 64) -> CheckResult:
    """A p-way merge of ``n`` keys uses at most ``n ceil(lg p) + 2p`` comparisons."""
    limit = n * math.ceil(math.log2(p)) + 2 * p
    worst, failures = 0, []
    for dist in GRID_DISTRIBUTIONS:
        X = generate(KeyGenSpec(n, 32, dist, _seed("merge", dist)))
        bounds = sequence_bounds(n, p)
        runs = []
        for k in range(p):
            part = X.data[bounds[k] : bounds[k + 1]].copy()
            base_sort(BaseSortKind.REF, part)
            runs.append(MergeRun(k, part))
        out = np.empty_like(X.data)
        counter = new_counter()
        multiway_merge(runs, out, counter=counter)
        used = int(counter[0])
        worst = max(worst, used)
        if used > limit:
            failures.append(f"{dist}: {used} > {limit}")
        if not np.array_equal(out, reference_sort(X)[0]):
            failures.append(f"{dist}: merged output is not sorted")
    detail = f"worst {worst} comparisons, limit {limit}"
    if failures:
        detail += "; " + "; ".join(failures)
    return CheckResult("merge comparison bound", not failures, detail)


@_timed
def phase_cost_shape(n: int = 100_000, ps: Iterable[int] = (4, 16, 64), tolerance: float = 0.10) -> CheckResult:
    """Base-sort comparisons scale as ``n lg(n/p)`` and merge comparisons as
    ``n lg p``: the per-key constants agree across ``p`` within ``tolerance``,
    and the merge stays within ``n ceil(lg p) + 2p``."""
    X = generate(KeyGenSpec(n, 32, "uniform-bytes", _seed("phase", n)))
    notes, ok = [], True
    for base in (BaseSortKind.HS, BaseSortKind.RQ):
        sort_c, merge_c = [], []
        for p in ps:
            _, report = run_pipeline(X, SortConfig.deterministic(p, 1, base=base))
            sort_c.append(report.comparisons["baseline_sort"] / (n * math.log2(n / p)))
            merge_c.append(report.comparisons["merge"] / (n * math.log2(p)))
            if report.comparisons["merge"] > n * math.ceil(math.log2(p)) + 2 * p:
                ok = False
        for label, c in (("sort", sort_c), ("merge", merge_c)):
            spread = max(c) / min(c) - 1
            ok &= spread <= tolerance
            notes.append(f"{base.value} {label} {min(c):.3f}..{max(c):.3f}")
    return CheckResult("phase cost shape", ok, ", ".join(notes))


# --------------------------------------------------------------------------
# splitter placement


def _composite_row(key: np.ndarray, seq: int, idx: int) -> bytes:
    return key.tobytes() + int(seq).to_bytes(8, "big") + int(idx).to_bytes(8, "big")


def separation_problems(X: KeyBuffer, report: SortReport) -> list[str]:
    """Why the sample cut or the buckets are misplaced, empty if they are not.

    Splitter ``i`` must have exactly ``i * s`` samples at or below it, and
    every key of bucket ``j`` (tagged with its sequence and index) must lie
    above splitter ``j - 1`` and at or below splitter ``j``.
    """
    if report.p == 1 or report.splitters is None:
        return []
    S: TaggedSamples = report.splitters.samples
    T: TaggedSamples = report.sample
    s = report.s
    raw_s = S.composite()
    comp_t = T.composite().view(f"S{T.keylen + 16}").reshape(-1)
    comp_s = raw_s.view(f"S{S.keylen + 16}").reshape(-1)
    problems = []
    ranks = np.searchsorted(comp_t, comp_s, side="right")
    want = np.arange(1, report.p, dtype=np.int64) * s
    if not np.array_equal(ranks, want):
        j = int(np.flatnonzero(ranks != want)[0])
        problems.append(f"splitter {j} has {ranks[j]} samples at or below it, expected {want[j]}")

    # the keys as they sat after baseline sorting, recovered from the output
    seq = sequence_bounds(X.n, report.p)
    bounds = report.plan.bounds
    out_keys = X.data[report.order]
    sorted_seqs = np.empty_like(X.data)
    # sequence k holds the input keys seq[k]..seq[k+1] in sorted order; bucket
    # output preserves, per sequence, that order
    for k in range(report.p):
        mask = (report.order >= seq[k]) & (report.order < seq[k + 1])
        sorted_seqs[seq[k] : seq[k + 1]] = out_keys[mask]
    for k in range(report.p):
        base_off = seq[k]
        for j in range(report.p - 1):
            cut = bounds[k, j + 1]
            spl = raw_s[j].tobytes()
            if cut > 0:
                left = _composite_row(sorted_seqs[base_off + cut - 1], k, cut - 1)
                if left > spl:
                    problems.append(f"sequence {k}: key {cut - 1} above splitter {j} yet left of the cut")
            if cut < seq[k + 1] - seq[k]:
                right = _composite_row(sorted_seqs[base_off + cut], k, cut)
                if right <= spl:
                    problems.append(f"sequence {k}: key {cut} at or below splitter {j} yet right of the cut")
        if len(problems) > 10:
            break
    return problems


@_timed
def order_separation(n: int = 100_000, ps: Iterable[int] = (4, 64)) -> CheckResult:
    """Splitters sit at sample ranks ``i * s`` and buckets respect them."""
    runs, problems = 0, []
    for dist in ("uniform-bytes", "few-distinct(4)", "constant"):
        X = generate(KeyGenSpec(n, 32, dist, _seed("sep", dist)))
        for p in ps:
            for cfg in (SortConfig.deterministic(p, 1, base=BaseSortKind.REF), SortConfig.randomized(p, seed=_seed("sep", p))):
                try:
                    _, report = run_pipeline(X, cfg)
                except ParameterError:
                    continue
                runs += 1
                problems += [f"{dist} {_describe(cfg)}: {msg}" for msg in separation_problems(X, report)]
    detail = f"{runs} runs, {len(problems)} problems"
    if problems:
        detail += "; first: " + problems[0]
    return CheckResult("order separation", runs > 0 and not problems, detail)


# --------------------------------------------------------------------------
# threads


@_timed
def parallel_determinism(
    n: int = 1_000_000, p: int = 64, threads: Iterable[int] = (1, 2, 4, 8), seed: int = 7
) -> CheckResult:
    """Multi-threaded output bytes equal the sequential output bytes."""
    X = generate(KeyGenSpec(n, 32, "uniform-bytes", _seed("mc", n)))
    mismatches = []
    compared = 0
    for mode_cfg in (SortConfig.randomized(p, seed=seed), SortConfig.deterministic(p, 1)):
        want, want_rep = run_pipeline(X, mode_cfg)
        for t in threads:
            for pm in (False, True):
                Y, rep = mc_sort(X, ParallelConfig(t, mode_cfg, parallel_merge=pm))
                compared += 1
                if not (
                    np.array_equal(Y.data, want.data)
                    and np.array_equal(rep.bucket_sizes, want_rep.bucket_sizes)
                    and np.array_equal(rep.order, want_rep.order)
                ):
                    mismatches.append(f"{mode_cfg.mode} t={t} parallel_merge={pm}")
    detail = f"{compared} threaded runs compared, {len(mismatches)} mismatches"
    if mismatches:
        detail += ": " + ", ".join(mismatches)
    return CheckResult("parallel determinism", not mismatches, detail)


# --------------------------------------------------------------------------
# soft timing trend


def usable_cores() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@_timed
def performance_trend(n: int = 4_096_000, ps: Iterable[int] = (4, 32, 64, 128, 256), trials: int = 3) -> CheckResult:
    """Soft timing comparison with the library sort.  The verdict says whether
    both targets were met; callers report it and never fail on it."""
    X = generate(KeyGenSpec(n, 32, "uniform-bytes", _seed("perf", n)))

    def best_of(fn) -> float:
        times = []
        for _ in range(trials):
            times.append(fn())
        return float(np.mean(times))

    def standalone() -> float:
        work = X.copy_data()
        t0 = time.perf_counter()
        base_sort(BaseSortKind.QS, work)
        return time.perf_counter() - t0

    def pipeline(p: int) -> Callable[[], float]:
        return lambda: run_pipeline(X, SortConfig.randomized(p, seed=1))[1].total_time

    def threaded() -> float:
        return mc_sort(X, ParallelConfig(4, SortConfig.randomized(64, seed=1)))[1].total_time

    base_t = best_of(standalone)
    ran = {p: best_of(pipeline(p)) for p in ps}
    best_p = min(ran, key=ran.get)
    mc_t = best_of(threaded)
    ratio_a = ran[best_p] / base_t
    speedup = base_t / mc_t
    cores = usable_cores()
    detail = (
        f"n={n}, {cores} core(s): qs {base_t:.2f}s, best sq_ran p={best_p} {ran[best_p]:.2f}s "
        f"(ratio {ratio_a:.3f}, target <= 1.05), mc t=4 {mc_t:.2f}s (speedup {speedup:.2f}, target >= 1.5)"
    )
    met = ratio_a <= 1.05 and speedup >= 1.5
    if cores < 4:
        detail += "; fewer than 4 cores, so the thread speedup is not measurable here"
    return CheckResult("performance trend", met, detail, soft=True)


# --------------------------------------------------------------------------
# randomized vs deterministic imbalance


@_timed
def imbalance_comparison(n: int = 1_000_000, p: int = 64, seeds: int = 20) -> CheckResult:
    """Mean bucket expansion of the randomized pipeline (default ``s``) is no
    larger than that of the deterministic one with ``r = 1``."""
    ran, det = [], []
    for i in range(seeds):
        X = generate(KeyGenSpec(n, 32, "uniform-bytes", _seed("imbalance", i)))
        ran.append(run_pipeline(X, SortConfig.randomized(p, seed=_seed("imbalance-sample", i)))[1].expansion)
        det.append(run_pipeline(X, SortConfig.deterministic(p, 1))[1].expansion)
    mr, md = float(np.mean(ran)), float(np.mean(det))
    detail = f"mean expansion randomized {mr:.4f} vs deterministic {md:.4f} over {seeds} seeds"
    return CheckResult("randomized vs deterministic imbalance", mr <= md, detail)


@_timed
def unstable_base_rejected() -> CheckResult:
    """Asking for stability with an unstable base is a configuration error."""
    rejected = []
    for base in BaseSortKind:
        if base.is_stable:
            continue
        try:
            SortConfig.randomized(4, base=base, stable=True)
        except ParameterError:
            rejected.append(base.value)
    want = [b.value for b in BaseSortKind if not b.is_stable]
    return CheckResult("unstable base rejected", rejected == want, f"rejected {rejected}")


# --------------------------------------------------------------------------


def battery(quick: bool = False) -> list[Callable[[], CheckResult]]:
    """The checks run by ``verify_suite``.  ``quick`` shrinks sizes for smoke tests."""
    if quick:
        return [
            lambda: correctness_grid(ns=(0, 1, 1000, 20_000), ps=(1, 2, 4, 32), time_limit=None),
            lambda: lemma_bound(count=60),
            lambda: claim_concentration(n=20_000, trials=10, allowed=1),
            lambda: stability(n=20_000, ps=(4, 64)),
            lambda: merge_cost(n=20_000),
            lambda: phase_cost_shape(n=20_000),
            lambda: order_separation(n=20_000),
            lambda: parallel_determinism(n=50_000, threads=(1, 2)),
            lambda: imbalance_comparison(n=100_000, seeds=4),
            unstable_base_rejected,
        ]
    return [
        correctness_grid,
        lemma_bound,
        claim_concentration,
        stability,
        merge_cost,
        phase_cost_shape,
        order_separation,
        parallel_determinism,
        imbalance_comparison,
        unstable_base_rejected,
    ]


def verify_suite(quick: bool = False, echo: Callable[[str], None] | None = print) -> tuple[bool, list[CheckResult]]:
    """Run the property battery, print one verdict line per property."""
    results = []
    for check in battery(quick):
        res = check()
        results.append(res)
        if echo is not None:
            echo(res.line())
    ok = all(r.passed for r in results)
    if echo is not None:
        echo(f"{'ALL PROPERTIES PASS' if ok else 'SOME PROPERTIES FAIL'} ({sum(r.seconds for r in results):.0f}s)")
    return ok, results
