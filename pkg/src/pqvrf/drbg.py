"""Deterministic random source built on keccak in counter mode.

``KeccakDrbg`` plugs into anything that accepts a ``random.Random``: the
standard library derives ``randrange``, ``randbytes``, ``choice`` and friends
from :meth:`getrandbits`, so overriding it is enough to make every draw a
reproducible function of the seed bytes.
"""

from __future__ import annotations

import random
import secrets

import numpy as np

from .keccak import keccak256, keccak256_batch

_BATCH_FROM = 16
_MAX_REFILL = 256


class KeccakDrbg(random.Random):
    def __init__(self, seed: bytes | str | int = b"") -> None:
        self._key = b""
        self._counter = 0
        self._buffer = b""
        self._refill = 0
        super().__init__(seed)

    def seed(self, a=None, version=2) -> None:  # noqa: D401 - random.Random API
        if a is None:
            a = secrets.token_bytes(32)
        if isinstance(a, int):
            a = a.to_bytes(max(1, (a.bit_length() + 7) // 8), "big")
        elif isinstance(a, str):
            a = a.encode()
        self._key = keccak256(b"pqvrf-drbg" + bytes(a))
        self.gauss_next = None
        self._counter = 0
        self._buffer = b""
        self._refill = 0

    def _take(self, n: int) -> bytes:
        if len(self._buffer) < n:
            need = -(-(n - len(self._buffer)) // 32)
            # heavy consumers get larger refills; the byte stream is the same either way
            count = max(need, min(_MAX_REFILL, 2 * self._refill))
            self._refill = count
            self._buffer += self._blocks(count)
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def _blocks(self, count: int) -> bytes:
        start = self._counter
        self._counter += count
        if count < _BATCH_FROM:
            return b"".join(keccak256(self._key + (start + i).to_bytes(8, "big")) for i in range(count))
        ctrs = np.arange(start, start + count, dtype=">u8").view(np.uint8).reshape(count, 8)
        key = np.broadcast_to(np.frombuffer(self._key, dtype=np.uint8), (count, len(self._key)))
        return keccak256_batch(np.concatenate((key, ctrs), axis=1)).tobytes()

    def getrandbits(self, k: int) -> int:
        if k < 0:
            raise ValueError("number of bits must be non-negative")
        if k == 0:
            return 0
        value = int.from_bytes(self._take((k + 7) // 8), "big")
        return value >> ((-k) % 8)

    def random(self) -> float:
        return self.getrandbits(53) / (1 << 53)

    def randbytes(self, n: int) -> bytes:
        return self._take(n)

    def getstate(self):
        return (self._key, self._counter, self._buffer)

    def setstate(self, state) -> None:
        self._key, self._counter, self._buffer = state

    def fork(self, label: bytes | str) -> "KeccakDrbg":
        """Independent child stream; does not advance this one."""
        if isinstance(label, str):
            label = label.encode()
        return KeccakDrbg(self._key + b"/" + label)


def system_rng() -> random.Random:
    return random.SystemRandom()
