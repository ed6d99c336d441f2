"""Fixed-length byte-string keys.

A key is ``L`` raw bytes compared lexicographically as unsigned bytes (the
``memcmp`` order).  A :class:`KeyBuffer` stores ``n`` such keys densely as an
``(n, L)`` ``uint8`` array; nothing else in the library needs to know more.
"""

from __future__ import annotations

import enum
import os
import re
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import CapacityError, KeyFileFormatError, UsageError

DEFAULT_KEYLEN = 32

KEYFILE_MAGIC = b"OVSK"
KEYFILE_VERSION = 1
_HEADER = struct.Struct("<4sHHQ")
HEADER_SIZE = _HEADER.size  # 16

_MAX_BYTES = np.iinfo(np.intp).max


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def compare(a: bytes, b: bytes) -> Ordering:
    """Bytewise lexicographic comparison of two equal-length keys."""
    if len(a) != len(b):
        raise UsageError(f"key length mismatch: {len(a)} != {len(b)}")
    a, b = bytes(a), bytes(b)
    if a == b:
        return Ordering.EQUAL
    # bytes ordering in Python is unsigned lexicographic, same as memcmp
    return Ordering.LESS if a < b else Ordering.GREATER


class KeyBuffer:
    """Immutable dense array of ``n`` keys of ``keylen`` bytes each."""

    __slots__ = ("_data",)

    def __init__(self, data: np.ndarray):
        data = np.asarray(data)
        if data.dtype != np.uint8 or data.ndim != 2:
            raise UsageError("KeyBuffer wants a 2-d uint8 array of shape (n, L)")
        if data.shape[1] < 1:
            raise UsageError("keys must be at least one byte long")
        data = np.ascontiguousarray(data)
        if data.flags.writeable:
            data = data.view()
            data.flags.writeable = False
        self._data = data

    @classmethod
    def empty(cls, keylen: int = DEFAULT_KEYLEN) -> "KeyBuffer":
        return cls(np.empty((0, keylen), dtype=np.uint8))

    @classmethod
    def from_bytes(cls, raw: bytes, keylen: int) -> "KeyBuffer":
        if keylen < 1:
            raise UsageError("keylen must be >= 1")
        if len(raw) % keylen:
            raise UsageError(f"{len(raw)} bytes is not a whole number of {keylen}-byte keys")
        return cls(np.frombuffer(raw, dtype=np.uint8).reshape(-1, keylen).copy())

    @classmethod
    def from_keys(cls, keys: Iterable[bytes], keylen: int | None = None) -> "KeyBuffer":
        keys = [bytes(k) for k in keys]
        if keylen is None:
            if not keys:
                raise UsageError("keylen is required for an empty key list")
            keylen = len(keys[0])
        if any(len(k) != keylen for k in keys):
            raise UsageError("all keys in a buffer must have the same length")
        return cls.from_bytes(b"".join(keys), keylen)

    @property
    def data(self) -> np.ndarray:
        """Read-only ``(n, L)`` uint8 view."""
        return self._data

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def keylen(self) -> int:
        return self._data.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> bytes:
        return self._data[i].tobytes()

    def __iter__(self) -> Iterator[bytes]:
        for row in self._data:
            yield row.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KeyBuffer):
            return NotImplemented
        return self._data.shape == other._data.shape and np.array_equal(self._data, other._data)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"KeyBuffer(n={self.n}, keylen={self.keylen})"

    def tobytes(self) -> bytes:
        return self._data.tobytes()

    def as_strings(self) -> np.ndarray:
        """View as a 1-d numpy ``S{L}`` array (numpy compares these bytewise)."""
        return self._data.view(f"S{self.keylen}").reshape(-1)

    def copy_data(self) -> np.ndarray:
        """Writable copy of the raw key array."""
        return self._data.copy()

    def sequence_bounds(self, p: int) -> np.ndarray:
        return sequence_bounds(self.n, p)

    def sequence(self, k: int, p: int) -> np.ndarray:
        b = sequence_bounds(self.n, p)
        return self._data[b[k] : b[k + 1]]


def sequence_bounds(n: int, p: int) -> np.ndarray:
    """Offsets of ``p`` contiguous sequences covering ``[0, n)``.

    The first ``n mod p`` sequences get ``ceil(n/p)`` keys, the rest
    ``floor(n/p)``.  Returns ``p + 1`` offsets.
    """
    if p < 1:
        raise UsageError("p must be >= 1")
    q, rem = divmod(n, p)
    sizes = np.full(p, q, dtype=np.int64)
    sizes[:rem] += 1
    bounds = np.zeros(p + 1, dtype=np.int64)
    np.cumsum(sizes, out=bounds[1:])
    return bounds


# --------------------------------------------------------------------------
# input generation

_FEW_DISTINCT = re.compile(r"few-distinct\((\d+)\)$")
DISTRIBUTIONS = ("uniform-bytes", "few-distinct(d)", "sorted", "reverse-sorted", "constant")


@dataclass(frozen=True)
class KeyGenSpec:
    n: int
    keylen: int = DEFAULT_KEYLEN
    distribution: str = "uniform-bytes"
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise UsageError("n must be >= 0")
        if self.keylen < 1:
            raise UsageError("keylen must be >= 1")
        parse_distribution(self.distribution)


def parse_distribution(name: str) -> tuple[str, int | None]:
    """Split ``few-distinct(4)`` into ``("few-distinct", 4)``."""
    name = {"reverse": "reverse-sorted", "uniform": "uniform-bytes"}.get(name, name)
    m = _FEW_DISTINCT.match(name)
    if m:
        d = int(m.group(1))
        if d < 1:
            raise UsageError("few-distinct needs d >= 1")
        return "few-distinct", d
    if name in ("uniform-bytes", "sorted", "reverse-sorted", "constant"):
        return name, None
    raise UsageError(f"unknown distribution {name!r}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))


def _uniform(rng: np.random.Generator, n: int, keylen: int) -> np.ndarray:
    return np.frombuffer(rng.bytes(n * keylen), dtype=np.uint8).reshape(n, keylen).copy()


def generate(spec: KeyGenSpec) -> KeyBuffer:
    """Build a reproducible benchmark input.  Same spec, same bytes."""
    n, L = spec.n, spec.keylen
    if n * L > _MAX_BYTES:
        raise CapacityError(f"{n} keys of {L} bytes exceed addressable memory")
    kind, d = parse_distribution(spec.distribution)
    rng = _rng(spec.seed)
    if n == 0:
        return KeyBuffer.empty(L)

    if kind == "uniform-bytes":
        data = _uniform(rng, n, L)
    elif kind == "few-distinct":
        if d > 256**L:
            raise UsageError(f"cannot draw {d} distinct {L}-byte keys")
        pool = np.unique(_uniform(rng, d, L), axis=0)
        while len(pool) < d:
            pool = np.unique(np.vstack([pool, _uniform(rng, d - len(pool), L)]), axis=0)
        data = pool[rng.integers(0, d, size=n)]
    elif kind == "constant":
        data = np.repeat(_uniform(rng, 1, L), n, axis=0)
    else:
        data = _uniform(rng, n, L)
        data = data[np.argsort(data.view(f"S{L}").reshape(-1), kind="stable")]
        if kind == "reverse-sorted":
            data = data[::-1].copy()
    return KeyBuffer(data)


# --------------------------------------------------------------------------
# key files: 16-byte header (magic, version u16, L u16, n u64; little-endian) + n*L bytes


def write_keyfile(buffer: KeyBuffer, path: str | os.PathLike) -> None:
    if buffer.keylen > 0xFFFF:
        raise UsageError("key files store L as u16")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(KEYFILE_MAGIC, KEYFILE_VERSION, buffer.keylen, buffer.n))
        fh.write(buffer.data.tobytes())


def read_keyfile(path: str | os.PathLike) -> KeyBuffer:
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
        if len(head) < HEADER_SIZE:
            raise KeyFileFormatError(f"{path}: truncated header")
        magic, version, keylen, n = _HEADER.unpack(head)
        if magic != KEYFILE_MAGIC:
            raise KeyFileFormatError(f"{path}: bad magic {magic!r}")
        if version != KEYFILE_VERSION:
            raise KeyFileFormatError(f"{path}: unsupported version {version}")
        if keylen == 0:
            raise KeyFileFormatError(f"{path}: zero-length keys")
        payload = fh.read()
    if len(payload) % keylen:
        raise KeyFileFormatError(f"{path}: payload of {len(payload)} bytes is not a multiple of L={keylen}")
    if len(payload) != n * keylen:
        raise KeyFileFormatError(f"{path}: header says {n} keys, payload holds {len(payload) // keylen}")
    return KeyBuffer(np.frombuffer(payload, dtype=np.uint8).reshape(n, keylen).copy())


# --------------------------------------------------------------------------
# verification helpers

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer, vectorized; uint64 arrays wrap on overflow
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def key_hashes(data: np.ndarray) -> np.ndarray:
    """64-bit hash of every row of an ``(n, L)`` uint8 array."""
    n, L = data.shape
    width = -(-L // 8) * 8
    if width != L:
        padded = np.zeros((n, width), dtype=np.uint8)
        padded[:, :L] = data
        data = padded
    words = np.ascontiguousarray(data).view("<u8")
    h = np.full(n, _GOLDEN, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for c in range(words.shape[1]):
            h = _mix64(h ^ (words[:, c] + _GOLDEN * np.uint64(c + 1)))
    return h


def multiset_hash(data: np.ndarray | KeyBuffer) -> int:
    """Order-independent 64-bit fingerprint of a multiset of keys."""
    if isinstance(data, KeyBuffer):
        data = data.data
    if data.shape[0] == 0:
        return 0
    h = key_hashes(data)
    with np.errstate(over="ignore"):
        total = int(np.sum(h, dtype=np.uint64))
        sq = int(np.sum(_mix64(h), dtype=np.uint64))
    return (total ^ (sq * 0x9E3779B97F4A7C15) ^ data.shape[0]) & 0xFFFFFFFFFFFFFFFF


def first_descent(data: np.ndarray | KeyBuffer, chunk: int = 1 << 18) -> int:
    """Index ``i`` of the first pair with ``key[i] > key[i+1]``, or -1.

    Works on raw bytes (first differing byte decides) so it is independent
    of any sort routine in the library.
    """
    if isinstance(data, KeyBuffer):
        data = data.data
    n = data.shape[0]
    for start in range(0, max(n - 1, 0), chunk):
        stop = min(start + chunk, n - 1)
        a = data[start:stop]
        b = data[start + 1 : stop + 1]
        neq = a != b
        col = neq.argmax(axis=1)
        rows = np.arange(stop - start)
        bad = neq[rows, col] & (a[rows, col] > b[rows, col])
        if bad.any():
            return start + int(bad.argmax())
    return -1
