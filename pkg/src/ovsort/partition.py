"""Sampling, splitter selection and splitting of pre-sorted sequences.

Duplicate keys are handled by tagging: a sample key carries the id of the
sequence it came from and its index there, and ``(key, seq, idx)`` triples
are compared lexicographically.  Input keys are never tagged explicitly;
their ``(seq, idx)`` is implied by where they sit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .core_sort import BaseSortKind, base_sort, new_counter
from .errors import ParameterError, UsageError

log = logging.getLogger(__name__)

_TAG = np.dtype(">u8")


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class RegularSampleParams:
    """Deterministic regular oversampling: ``s = r * p`` samples per sequence."""

    p: int
    r: int

    @property
    def s(self) -> int:
        return self.r * self.p

    def validate(self, n: int) -> None:
        if self.p < 2:
            raise ParameterError("regular sampling needs p >= 2")
        if self.r < 1:
            raise ParameterError("r must be >= 1")
        if self.r * self.p * self.p > n:
            raise ParameterError(f"sample of r*p^2 = {self.r * self.p ** 2} keys does not fit in n = {n}")
        if self.r * self.r * self.p * self.p > n:
            log.warning("r^2 p^2 = %d > n = %d: the balance bound is not guaranteed", (self.r * self.p) ** 2, n)


@dataclass(frozen=True)
class RandomSampleParams:
    """Random oversampling: ``p*s - 1`` keys drawn uniformly."""

    p: int
    s: int

    @property
    def sample_size(self) -> int:
        return self.p * self.s - 1

    def validate(self, n: int) -> None:
        if self.p < 2:
            raise ParameterError("random sampling needs p >= 2")
        if self.s < 1:
            raise ParameterError("s must be >= 1")
        if not 2 * self.p * self.s < n:
            raise ParameterError(f"p*s = {self.p * self.s} must be below n/2 = {n / 2}")


def default_oversampling(n: int, a: float | None = None) -> int:
    """``ceil(lg^2 n)``, or ``ceil(lg^(1+a) n)`` when ``a`` is given."""
    if n < 2:
        return 1
    lg = math.log2(n)
    s = lg * lg if a is None else lg ** (1.0 + a)
    return max(1, math.ceil(s - 1e-9))


# --------------------------------------------------------------------------
# tagged samples


@dataclass(frozen=True, order=True)
class TaggedSample:
    key: bytes
    seq: int
    idx: int


class TaggedSamples:
    """Struct-of-arrays list of tagged samples."""

    __slots__ = ("keys", "seq", "idx")

    def __init__(self, keys: np.ndarray, seq: np.ndarray, idx: np.ndarray):
        self.keys = np.ascontiguousarray(keys, dtype=np.uint8)
        self.seq = np.asarray(seq, dtype=np.int64)
        self.idx = np.asarray(idx, dtype=np.int64)
        if not (len(self.keys) == len(self.seq) == len(self.idx)):
            raise UsageError("keys, seq and idx must have equal lengths")

    @classmethod
    def from_records(cls, records: Sequence[TaggedSample], keylen: int) -> "TaggedSamples":
        keys = np.frombuffer(b"".join(r.key for r in records), dtype=np.uint8).reshape(-1, keylen)
        return cls(keys.copy(), [r.seq for r in records], [r.idx for r in records])

    def __len__(self) -> int:
        return self.keys.shape[0]

    def __getitem__(self, i) -> "TaggedSample | TaggedSamples":
        if isinstance(i, (int, np.integer)):
            return TaggedSample(self.keys[i].tobytes(), int(self.seq[i]), int(self.idx[i]))
        return TaggedSamples(self.keys[i], self.seq[i], self.idx[i])

    def __iter__(self) -> Iterator[TaggedSample]:
        for i in range(len(self)):
            yield self[i]

    def records(self) -> list[TaggedSample]:
        return list(self)

    @property
    def keylen(self) -> int:
        return self.keys.shape[1]

    def composite(self) -> np.ndarray:
        """Rows ``key || seq || idx`` (tags big-endian) whose bytewise order is
        the triple order."""
        m, L = self.keys.shape
        out = np.empty((m, L + 16), dtype=np.uint8)
        out[:, :L] = self.keys
        out[:, L : L + 8] = self.seq.astype(_TAG).view(np.uint8).reshape(m, 8)
        out[:, L + 8 :] = self.idx.astype(_TAG).view(np.uint8).reshape(m, 8)
        return out

    @classmethod
    def from_composite(cls, rows: np.ndarray, keylen: int) -> "TaggedSamples":
        L = keylen
        seq = np.ascontiguousarray(rows[:, L : L + 8]).view(_TAG).reshape(-1).astype(np.int64)
        idx = np.ascontiguousarray(rows[:, L + 8 :]).view(_TAG).reshape(-1).astype(np.int64)
        return cls(rows[:, :L], seq, idx)


@dataclass
class SplitterSet:
    samples: TaggedSamples

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, i: int) -> TaggedSample:
        return self.samples[i]

    @property
    def p(self) -> int:
        return len(self) + 1


# --------------------------------------------------------------------------
# sampling


def regular_sample(xk: np.ndarray, k: int, params: RegularSampleParams, n: int) -> TaggedSamples:
    """``s - 1`` evenly spaced keys of sorted ``xk`` plus its maximum.

    Sequences are conceptually padded with copies of their maximum up to
    ``s * x`` keys, ``x = ceil(ceil(n/p) / s)``, and sampled at every ``x``-th
    position, the last sample being the maximum.  Padding is virtual:
    positions past the end read the last key but keep their own (virtual)
    index, so tags stay unique.
    """
    m = xk.shape[0]
    if m == 0:
        raise UsageError(f"sequence {k} is empty")
    s = params.s
    x = -(-(-(-n // params.p)) // s)
    idx = np.arange(1, s + 1, dtype=np.int64) * x - 1
    if s == 1 or idx[-2] < m - 1:
        idx[-1] = m - 1
    rows = np.minimum(idx, m - 1)
    return TaggedSamples(xk[rows], np.full(s, k, dtype=np.int64), idx)


def merge_samples(lists: Sequence[TaggedSamples]) -> TaggedSamples:
    """Merge per-sequence sample lists (each sorted) into one sorted list."""
    lists = [t for t in lists if len(t)]
    if not lists:
        raise UsageError("nothing to merge")
    if len(lists) == 1:
        return lists[0]
    keylen = lists[0].keylen
    comp = [t.composite() for t in lists]
    src = np.concatenate(comp)
    offs = np.zeros(len(comp) + 1, dtype=np.int64)
    np.cumsum([len(c) for c in comp], out=offs[1:])
    out = np.empty_like(src)
    perm = np.arange(len(src), dtype=np.int64)
    _kernels.merge_spans(src, perm, offs[:-1].copy(), offs[1:].copy(), out, np.empty_like(perm), 0, new_counter())
    return TaggedSamples.from_composite(out, keylen)


def sample_positions(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` distinct positions of ``[0, n)`` by a sparse partial Fisher-Yates."""
    if m > n:
        raise ParameterError(f"cannot draw {m} distinct positions out of {n}")
    if m == 0:
        return np.empty(0, dtype=np.int64)
    picks = rng.integers(np.arange(m, dtype=np.int64), n).tolist()
    moved: dict[int, int] = {}
    out = [0] * m
    for i, j in enumerate(picks):
        out[i] = moved.get(j, j)
        moved[j] = moved.get(i, i)
    return np.asarray(out, dtype=np.int64)


def random_sample(
    data: np.ndarray,
    seq_bounds: np.ndarray,
    params: RandomSampleParams,
    rng: np.random.Generator | int,
    base: BaseSortKind | str = BaseSortKind.QS,
) -> TaggedSamples:
    """Draw ``p*s - 1`` keys uniformly without replacement and sort them.

    ``data`` holds the baseline-sorted sequences back to back, sequence ``k``
    at ``data[seq_bounds[k]:seq_bounds[k+1]]``.  The sample is sorted in the
    triple order by the configured base sort.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = data.shape[0]
    m = params.sample_size
    if m > n:
        raise ParameterError(f"sample of {m} keys exceeds n = {n}")
    g = sample_positions(n, m, rng)
    seq = np.searchsorted(seq_bounds, g, side="right") - 1
    tagged = TaggedSamples(data[g], seq, g - seq_bounds[seq])
    comp = tagged.composite()
    base_sort(base, comp)
    return TaggedSamples.from_composite(comp, data.shape[1])


# --------------------------------------------------------------------------
# splitters and splitting


def select_splitters(T: TaggedSamples, p: int, s: int) -> SplitterSet:
    """Splitter ``i`` (1-based) is the ``i*s``-th smallest sample."""
    if p < 1 or s < 1:
        raise ParameterError("p and s must be positive")
    if len(T) < (p - 1) * s:
        raise ParameterError(f"sample of {len(T)} is smaller than (p-1)*s = {(p - 1) * s}")
    ranks = np.arange(1, p, dtype=np.int64) * s - 1
    return SplitterSet(T[ranks])


@dataclass
class PartitionPlan:
    """``bounds[k, j]`` is where bucket ``j`` starts inside sorted sequence ``k``."""

    bounds: np.ndarray

    @property
    def p(self) -> int:
        return self.bounds.shape[1] - 1

    @property
    def n(self) -> int:
        return int(self.bounds[:, -1].sum())

    def piece_sizes(self) -> np.ndarray:
        return np.diff(self.bounds, axis=1)

    def bucket_sizes(self) -> np.ndarray:
        return self.piece_sizes().sum(axis=0)

    def bucket_offsets(self) -> np.ndarray:
        out = np.zeros(self.p + 1, dtype=np.int64)
        np.cumsum(self.bucket_sizes(), out=out[1:])
        return out


SPLIT_STRATEGIES = ("binary-search", "merge")


def split_around(
    xk: np.ndarray,
    k: int,
    splitters: SplitterSet,
    strategy: str = "binary-search",
    counter: np.ndarray | None = None,
) -> np.ndarray:
    """Row ``k`` of the plan: ``p + 1`` offsets into sorted ``xk``.

    ``row[j + 1]`` counts positions ``i`` with ``(xk[i], k, i) <= splitter j``.
    """
    if counter is None:
        counter = new_counter()
    S = splitters.samples
    row = np.empty(len(S) + 2, dtype=np.int64)
    if len(S) and S.keylen != xk.shape[1]:
        raise UsageError("splitters and keys differ in length")
    if strategy == "binary-search":
        kernel = _kernels.split_binary
    elif strategy == "merge":
        kernel = _kernels.split_merge
    else:
        raise UsageError(f"unknown split strategy {strategy!r}")
    keys = S.keys if len(S) else np.empty((0, xk.shape[1]), dtype=np.uint8)
    kernel(xk, k, keys, S.seq, S.idx, row, counter)
    return row


# --------------------------------------------------------------------------
# balance


@dataclass(frozen=True)
class BalanceBound:
    """Largest bucket regular oversampling may produce:
    ``(1 + 1/r) * n/p + r*p``, with ``r = ceil(omega_n)``."""

    n: int
    p: int
    r: int

    @property
    def n_max(self) -> Fraction:
        return (1 + Fraction(1, self.r)) * Fraction(self.n, self.p) + self.r * self.p

    @property
    def limit(self) -> int:
        return math.ceil(self.n_max)

    @property
    def applies(self) -> bool:
        """Whether ``omega_n^2 p <= n/p`` holds, i.e. ``r^2 p^2 <= n``."""
        return self.r * self.r * self.p * self.p <= self.n


@dataclass
class BalanceReport:
    sizes: np.ndarray
    limit: int | None
    passed: bool

    @property
    def max_size(self) -> int:
        return int(self.sizes.max()) if len(self.sizes) else 0

    def expansion(self, n: int) -> float:
        """Largest bucket over the ideal ``n/p``."""
        if n == 0:
            return 1.0
        return self.max_size * len(self.sizes) / n


def check_balance(plan: PartitionPlan, bound: BalanceBound | None = None) -> BalanceReport:
    """Bucket sizes, checked against ``bound`` when one is given.

    Randomized plans have no hard bound; pass ``None`` and the sizes and
    expansion are only logged.
    """
    sizes = plan.bucket_sizes()
    if bound is None:
        rep = BalanceReport(sizes, None, True)
        log.debug("bucket sizes max=%d expansion=%.4f", rep.max_size, rep.expansion(plan.n))
        return rep
    limit = bound.limit
    return BalanceReport(sizes, limit, bool((sizes <= limit).all()))
