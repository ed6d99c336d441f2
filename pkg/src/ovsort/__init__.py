"""Sample-partitioned sorting of fixed-length byte keys.

A buffer of keys is cut into ``p`` sequences, each sequence is sorted by a
pluggable base sort, a regular or random sample picks ``p - 1`` splitters,
and a p-way merge assembles the buckets.
"""

from __future__ import annotations

from .core_sort import BaseSortKind, MergeRun, base_sort, multiway_merge
from .errors import (
    CapacityError,
    KeyFileFormatError,
    OvsortError,
    ParameterError,
    UsageError,
    VerificationError,
)
from .keys import KeyBuffer, KeyGenSpec, Ordering, compare, generate, read_keyfile, write_keyfile
from .parallel import ParallelConfig, mc_sort
from .pipeline import SortConfig, SortReport, sort, sort_with_oracle_check, sq_det, sq_ran, verify_output

__all__ = [
    "BaseSortKind",
    "CapacityError",
    "KeyBuffer",
    "KeyFileFormatError",
    "KeyGenSpec",
    "MergeRun",
    "Ordering",
    "OvsortError",
    "ParallelConfig",
    "ParameterError",
    "SortConfig",
    "SortReport",
    "UsageError",
    "VerificationError",
    "base_sort",
    "compare",
    "generate",
    "mc_sort",
    "multiway_merge",
    "read_keyfile",
    "sort",
    "sort_with_oracle_check",
    "sq_det",
    "sq_ran",
    "verify_output",
    "write_keyfile",
]
