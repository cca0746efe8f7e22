"""Entropy estimators and bit-balance checks for output streams."""

from __future__ import annotations

import math

import numpy as np

from .sequence import as_sequence


def empirical_shannon_entropy(data: bytes) -> float:
    """Plug-in Shannon entropy of the byte histogram, in bits per byte.

    Meaningful from a few hundred bytes upward.
    """
    if not data:
        raise ValueError("entropy of an empty stream is undefined")
    counts = np.bincount(np.frombuffer(bytes(data), dtype=np.uint8), minlength=256)
    f = counts[counts > 0] / len(data)
    return float(max(0.0, -(f * np.log2(f)).sum()))


def closed_form_entropy(n: int, z: float) -> float:
    """H = -(x) log2(x) 2^256 with x = 2^(-256 n) / Z, computed through log2 x."""
    if z <= 0:
        raise ValueError("normaliser Z must be positive")
    log_x = -math.log2(z) - 256 * n
    return -log_x * 2.0 ** (log_x + 256)


def ones_ratio_blocks(seq, block_bits: int = 128) -> tuple[np.ndarray, float]:
    bits = as_sequence(seq).bits
    blocks = bits.size // block_bits
    if blocks < 1:
        raise ValueError("sequence shorter than one block")
    ratios = bits[: blocks * block_bits].reshape(blocks, block_bits).mean(axis=1)
    return ratios, float(ratios.mean())
