"""Knuth-Yao discrete Gaussian sampling.

The probability matrix holds the ``precision_bits``-bit binary expansion of
the one-sided pmf of |k| for k in [0, tail_bound]; row 0 carries rho(0)/S and
every other row 2 rho(k)/S, where S is the two-sided normaliser. A separate
sign bit then splits each non-zero magnitude evenly, so the output is exactly
symmetric and zero is counted once.

Each sample reads one fixed-width *slot* from the bit source: the first bit
is the sign, the next ``precision_bits`` bits drive the DDG-tree walk (most
significant first), and the remainder of the last byte is ignored. A walk
that falls off the truncated tree (probability below
``(tail_bound + 1) * 2**-precision_bits``) discards the slot and reads the
next one. Fixed slots keep the scalar and vectorised samplers bit-identical.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .params import RlweParams


class SamplerError(RuntimeError):
    pass


class StreamExhausted(SamplerError):
    """A finite deterministic bit source ran out."""


def discrete_gaussian_pmf(sigma: float, tail_bound: int, digits: int = 60) -> list[decimal.Decimal]:
    """Two-sided pmf over [-tail_bound, tail_bound], returned for k = 0..tail_bound."""
    ctx = decimal.Context(prec=digits)
    two_s2 = ctx.multiply(2, ctx.multiply(decimal.Decimal(repr(sigma)), decimal.Decimal(repr(sigma))))
    rho = [ctx.exp(ctx.divide(-decimal.Decimal(k * k), two_s2)) for k in range(tail_bound + 1)]
    total = ctx.add(rho[0], ctx.multiply(2, sum(rho[1:], decimal.Decimal(0))))
    return [ctx.divide(r, total) for r in rho]


@dataclass(frozen=True)
class KnuthYaoSampler:
    precision_bits: int
    tail_bound: int
    prob_rows: tuple[int, ...]  # one-sided probabilities scaled by 2**precision_bits

    @classmethod
    def from_params(cls, params: RlweParams) -> "KnuthYaoSampler":
        pmf = discrete_gaussian_pmf(params.sigma, params.tail_bound)
        scale = decimal.Decimal(2) ** params.precision_bits
        rows = [int(pmf[0] * scale)] + [int(2 * p * scale) for p in pmf[1:]]
        return cls(params.precision_bits, params.tail_bound, tuple(rows))

    @property
    def slot_bytes(self) -> int:
        return (1 + self.precision_bits + 7) // 8

    def prob_matrix(self) -> np.ndarray:
        """Rows = magnitudes, columns = binary digits of weight 2^-(c+1)."""
        shifts = np.arange(self.precision_bits - 1, -1, -1, dtype=np.uint64)
        rows = np.array(self.prob_rows, dtype=np.uint64)[:, None]
        return ((rows >> shifts) & np.uint64(1)).astype(np.uint8)

    def _walk_tables(self) -> tuple[np.ndarray, np.ndarray]:
        cached = self.__dict__.get("_tables")
        if cached is None:
            mat = self.prob_matrix()
            weights = mat.sum(axis=0).astype(np.int64)
            width = max(1, int(weights.max()))
            lookup = np.full((self.precision_bits, width), -1, dtype=np.int64)
            for col in range(self.precision_bits):
                # traversal scans rows from tail_bound down to 0
                hits = [r for r in range(self.tail_bound, -1, -1) if mat[r, col]]
                lookup[col, : len(hits)] = hits
            cached = (weights, lookup)
            object.__setattr__(self, "_tables", cached)
        return cached

    def decode_slot(self, slot: bytes) -> int | None:
        if len(slot) != self.slot_bytes:
            raise ValueError(f"slot must be {self.slot_bytes} bytes")
        weights, lookup = self._walk_tables()
        value = int.from_bytes(slot, "big")
        total_bits = 8 * self.slot_bytes
        negative = value >> (total_bits - 1)
        walk = (value >> (total_bits - 1 - self.precision_bits)) & ((1 << self.precision_bits) - 1)
        d = 0
        for col in range(self.precision_bits):
            d = 2 * d + ((walk >> (self.precision_bits - 1 - col)) & 1)
            w = int(weights[col])
            if d < w:
                k = int(lookup[col, d])
                return -k if negative else k
            d -= w
        return None

    def decode_slots(self, slots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised :meth:`decode_slot` over ``(..., slot_bytes)``; returns (values, ok)."""
        weights, lookup = self._walk_tables()
        arr = np.asarray(slots, dtype=np.uint8)
        value = np.zeros(arr.shape[:-1], dtype=np.uint64)
        for i in range(self.slot_bytes):
            value = (value << np.uint64(8)) | arr[..., i].astype(np.uint64)
        total_bits = 8 * self.slot_bytes
        negative = (value >> np.uint64(total_bits - 1)).astype(bool)
        walk = (value >> np.uint64(total_bits - 1 - self.precision_bits)) & np.uint64(
            (1 << self.precision_bits) - 1
        )
        d = np.zeros(value.shape, dtype=np.int64)
        out = np.zeros(value.shape, dtype=np.int64)
        active = np.ones(value.shape, dtype=bool)
        for col in range(self.precision_bits):
            bit = ((walk >> np.uint64(self.precision_bits - 1 - col)) & np.uint64(1)).astype(np.int64)
            d = np.where(active, 2 * d + bit, d)
            w = weights[col]
            hit = active & (d < w)
            if hit.any():
                out[hit] = lookup[col][d[hit]]
            d = np.where(active & ~hit, d - w, d)
            active &= ~hit
            if not active.any():
                break
        out = np.where(negative, -out, out)
        return out, ~active

    def pmf(self) -> dict[int, float]:
        """Exact output distribution implied by the truncated matrix (renormalised)."""
        total = sum(self.prob_rows)
        out = {0: self.prob_rows[0] / total}
        for k in range(1, self.tail_bound + 1):
            out[k] = out[-k] = self.prob_rows[k] / (2 * total)
        return out


class ByteSource:
    """Sequential reader over an iterable of byte blocks.

    Finite sources raise :class:`StreamExhausted` when drained.
    """

    def __init__(self, blocks: Iterable[bytes]) -> None:
        self._blocks: Iterator[bytes] = iter(blocks)
        self._buf = bytearray()
        self.consumed = 0

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            try:
                self._buf.extend(next(self._blocks))
            except StopIteration:
                raise StreamExhausted(f"bit source exhausted after {self.consumed} bytes") from None
        out = bytes(self._buf[:n])
        del self._buf[:n]
        self.consumed += n
        return out

    @classmethod
    def from_rng(cls, rng, block: int = 256) -> "ByteSource":
        def gen():
            while True:
                yield rng.randbytes(block)

        return cls(gen())


def knuth_yao_sample(sampler: KnuthYaoSampler, source: ByteSource) -> int:
    while True:
        k = sampler.decode_slot(source.read(sampler.slot_bytes))
        if k is not None:
            return k


def sample_poly(sampler: KnuthYaoSampler, source: ByteSource, n: int) -> list[int]:
    return [knuth_yao_sample(sampler, source) for _ in range(n)]
