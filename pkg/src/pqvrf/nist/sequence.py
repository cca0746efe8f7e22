"""Bit sequences for the statistical tests."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class BitSequence:
    packed: bytes
    n: int

    def __post_init__(self) -> None:
        if not 0 <= self.n <= 8 * len(self.packed):
            raise ValueError("bit length exceeds packed data")

    @classmethod
    def from_bits(cls, bits) -> "BitSequence":
        if isinstance(bits, str):
            arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
        else:
            arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or (arr > 1).any():
            raise ValueError("expected a 1-D sequence of 0/1 values")
        return cls(np.packbits(arr).tobytes(), int(arr.size))

    @classmethod
    def from_bytes(cls, data: bytes, n: int | None = None) -> "BitSequence":
        return cls(bytes(data), 8 * len(data) if n is None else n)

    @cached_property
    def bits(self) -> np.ndarray:
        out = np.unpackbits(np.frombuffer(self.packed, dtype=np.uint8))[: self.n]
        out.setflags(write=False)
        return out

    def __len__(self) -> int:
        return self.n


def as_sequence(seq) -> BitSequence:
    return seq if isinstance(seq, BitSequence) else BitSequence.from_bits(seq)
