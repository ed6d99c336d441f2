from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ovsort.keys import KeyBuffer

# compiled kernels make the first example slow; timing deadlines are noise here
settings.register_profile("ovsort", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ovsort")


def ints_to_keys(values, keylen: int = 4) -> KeyBuffer:
    """Big-endian encoding, so byte order equals integer order."""
    return KeyBuffer.from_keys([int(v).to_bytes(keylen, "big") for v in values], keylen)


def keys_to_ints(buf: KeyBuffer | np.ndarray) -> list[int]:
    data = buf.data if isinstance(buf, KeyBuffer) else buf
    return [int.from_bytes(row.tobytes(), "big") for row in data]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
