"""Pluggable base sorts and the stable p-way merge."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import CapacityError, UsageError


class BaseSortKind(str, enum.Enum):
    QS = "qs"  # numpy's introsort (the library sort)
    HS = "hs"  # bottom-up heapsort
    RQ = "rq"  # recursive median-of-three quicksort with heapsort guard
    REF = "ref"  # numpy's stable sort, the trusted reference

    @property
    def is_stable(self) -> bool:
        return self is BaseSortKind.REF

    @property
    def counts_comparisons(self) -> bool:
        return self in (BaseSortKind.HS, BaseSortKind.RQ)

    @classmethod
    def parse(cls, value: "str | BaseSortKind") -> "BaseSortKind":
        try:
            return cls(value)
        except ValueError:
            raise UsageError(f"unknown base sort {value!r}; pick one of qs, hs, rq, ref") from None


def new_counter() -> np.ndarray:
    return np.zeros(1, dtype=np.int64)


def _check_span(keys: np.ndarray) -> None:
    if keys.dtype != np.uint8 or keys.ndim != 2 or not keys.flags.c_contiguous:
        raise UsageError("key spans must be C-contiguous (m, L) uint8 arrays")
    if not keys.flags.writeable:
        raise UsageError("base_sort sorts in place; span is read-only")


def base_sort(
    kind: BaseSortKind | str,
    keys: np.ndarray,
    perm: np.ndarray | None = None,
    counter: np.ndarray | None = None,
) -> None:
    """Sort the rows of ``keys`` in place, permuting ``perm`` alongside.

    ``counter`` (a one-slot int64 array) accumulates key comparisons for the
    kinds that can count them (``hs``, ``rq``).
    """
    kind = BaseSortKind.parse(kind)
    _check_span(keys)
    m = keys.shape[0]
    if perm is None:
        perm = np.arange(m, dtype=np.int64)
    elif perm.shape != (m,):
        raise UsageError("perm must have one entry per key")
    if m < 2:
        return
    if counter is None:
        counter = new_counter()

    if kind is BaseSortKind.HS:
        _kernels.heapsort(keys, perm, counter)
    elif kind is BaseSortKind.RQ:
        _kernels.quicksort(keys, perm, counter)
    else:
        strings = keys.view(f"S{keys.shape[1]}").reshape(-1)
        order = np.argsort(strings, kind="stable" if kind is BaseSortKind.REF else "quicksort")
        keys[:] = keys[order]
        perm[:] = perm[order]


@dataclass
class MergeRun:
    """A sorted span of keys that came from baseline sequence ``seq``."""

    seq: int
    keys: np.ndarray
    perm: np.ndarray | None = None

    def __len__(self) -> int:
        return self.keys.shape[0]


def multiway_merge(
    runs: Sequence[MergeRun],
    out: np.ndarray,
    out_perm: np.ndarray | None = None,
    counter: np.ndarray | None = None,
) -> None:
    """Merge sorted runs into ``out``.

    Equal keys are emitted by ascending ``seq``, then by position inside the
    run, so merging runs cut from contiguous input blocks is stable.  Without
    explicit ``perm`` arrays, a run's entries are numbered by its position in
    the concatenation of runs taken in ``seq`` order.
    """
    runs = sorted(runs, key=lambda r: r.seq)
    total = sum(len(r) for r in runs)
    if out.ndim != 2 or out.shape[0] < total:
        raise CapacityError(f"output span holds {out.shape[0]} keys, merge needs {total}")
    if total == 0:
        return
    keylen = runs[0].keys.shape[1]
    if any(r.keys.shape[1] != keylen for r in runs) or out.shape[1] != keylen:
        raise UsageError("runs and output must share one key length")

    src = np.ascontiguousarray(np.concatenate([r.keys for r in runs]))
    offsets = np.zeros(len(runs) + 1, dtype=np.int64)
    np.cumsum([len(r) for r in runs], out=offsets[1:])
    if all(r.perm is not None for r in runs):
        src_perm = np.concatenate([np.asarray(r.perm, dtype=np.int64) for r in runs])
    else:
        src_perm = np.arange(total, dtype=np.int64)
    if out_perm is None:
        out_perm = np.empty(out.shape[0], dtype=np.int64)
    if counter is None:
        counter = new_counter()
    _kernels.merge_spans(src, src_perm, offsets[:-1].copy(), offsets[1:].copy(), out, out_perm, 0, counter)
