"""Keccak-256 (Ethereum flavour: original Keccak padding, not FIPS-202 SHA3).

Two entry points share one permutation definition:

* :func:`keccak256` hashes a single byte string in pure Python.
* :func:`keccak256_batch` hashes many equal-length messages at once with
  numpy, one lane array per state word. It is used by the bulk evaluation
  pipeline where millions of short counter-mode blocks are hashed.
"""

from __future__ import annotations

import numpy as np

RATE = 136  # bytes, capacity 512 bits
KECCAK_SUFFIX = 0x01
SHA3_SUFFIX = 0x06

_MASK = (1 << 64) - 1

ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# rotation offsets indexed by lane x + 5*y
ROTATIONS = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)

# pi step: lane (x, y) moves to (y, 2x + 3y)
_PI_DEST = tuple(y + 5 * ((2 * x + 3 * y) % 5) for y in range(5) for x in range(5))
_PI_SRC = tuple(x + 5 * y for y in range(5) for x in range(5))


def _build_permutation():
    # Straight-line round body over 25 local lanes; about 2x faster than loops.
    lines = ["def _round(" + ", ".join(f"a{i}" for i in range(25)) + ", rc):"]
    for x in range(5):
        lines.append(f"    c{x} = a{x} ^ a{x + 5} ^ a{x + 10} ^ a{x + 15} ^ a{x + 20}")
    for x in range(5):
        cn = f"c{(x + 1) % 5}"
        lines.append(f"    d{x} = c{(x - 1) % 5} ^ ((({cn} << 1) | ({cn} >> 63)) & M)")
    for src, dst in zip(_PI_SRC, _PI_DEST):
        r = ROTATIONS[src]
        v = f"(a{src} ^ d{src % 5})"
        if r:
            lines.append(f"    b{dst} = (({v} << {r}) | ({v} >> {64 - r})) & M")
        else:
            lines.append(f"    b{dst} = {v}")
    outs = []
    for y in range(0, 25, 5):
        for x in range(5):
            i, j, k = y + x, y + (x + 1) % 5, y + (x + 2) % 5
            expr = f"b{i} ^ ((~b{j}) & b{k})"
            outs.append(f"({expr}) ^ rc" if i == 0 else expr)
    lines.append("    return (" + ", ".join(outs) + ")")
    namespace = {"M": _MASK}
    exec("\n".join(lines), namespace)
    return namespace["_round"]


_round = _build_permutation()


def keccak_f1600(state: list[int]) -> list[int]:
    """Apply the 24-round permutation to 25 lanes (little-endian words)."""
    lanes = tuple(state)
    for rc in ROUND_CONSTANTS:
        lanes = _round(*lanes, rc)
    return list(lanes)


def _pad(data: bytes, suffix: int) -> bytes:
    padded = bytearray(data)
    padded.append(suffix)
    padded.extend(b"\x00" * ((-len(padded)) % RATE))
    padded[-1] |= 0x80
    return bytes(padded)


def sponge(data: bytes, suffix: int = KECCAK_SUFFIX, outlen: int = 32) -> bytes:
    """Keccak[c=512] sponge with a configurable domain suffix byte."""
    state = [0] * 25
    padded = _pad(data, suffix)
    for off in range(0, len(padded), RATE):
        block = padded[off:off + RATE]
        for i in range(RATE // 8):
            state[i] ^= int.from_bytes(block[8 * i:8 * i + 8], "little")
        state = keccak_f1600(state)
    out = b"".join(v.to_bytes(8, "little") for v in state[:RATE // 8])
    return out[:outlen]


def keccak256(data: bytes = b"") -> bytes:
    return sponge(bytes(data), KECCAK_SUFFIX, 32)


def _rotl(v: np.ndarray, r: int) -> np.ndarray:
    if r == 0:
        return v
    return (v << np.uint64(r)) | (v >> np.uint64(64 - r))


def _keccak_f1600_batch(a: list[np.ndarray]) -> list[np.ndarray]:
    for rc in ROUND_CONSTANTS:
        c = [a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20] for x in range(5)]
        d = [c[(x - 1) % 5] ^ _rotl(c[(x + 1) % 5], 1) for x in range(5)]
        a = [a[i] ^ d[i % 5] for i in range(25)]
        b: list[np.ndarray] = [None] * 25  # type: ignore[list-item]
        for src, dst in zip(_PI_SRC, _PI_DEST):
            b[dst] = _rotl(a[src], ROTATIONS[src])
        a = [None] * 25  # type: ignore[list-item]
        for y in range(0, 25, 5):
            for x in range(5):
                a[y + x] = b[y + x] ^ (~b[y + (x + 1) % 5] & b[y + (x + 2) % 5])
        a[0] = a[0] ^ np.uint64(rc)
    return a


def keccak256_batch(messages: np.ndarray) -> np.ndarray:
    """Hash each row of a ``(B, L)`` uint8 array; returns ``(B, 32)`` uint8."""
    msgs = np.ascontiguousarray(messages, dtype=np.uint8)
    if msgs.ndim != 2:
        raise ValueError("expected a 2-D array of equal-length messages")
    count, length = msgs.shape
    padded_len = length + 1 + ((-(length + 1)) % RATE)
    buf = np.zeros((count, padded_len), dtype=np.uint8)
    buf[:, :length] = msgs
    buf[:, length] ^= KECCAK_SUFFIX
    buf[:, -1] |= 0x80
    words = buf.view("<u8").astype(np.uint64)  # (B, padded_len / 8)
    state = [np.zeros(count, dtype=np.uint64) for _ in range(25)]
    per_block = RATE // 8
    for blk in range(padded_len // RATE):
        for i in range(per_block):
            state[i] = state[i] ^ words[:, blk * per_block + i]
        state = _keccak_f1600_batch(state)
    out = np.stack(state[:4], axis=1).astype("<u8")
    return out.view(np.uint8).reshape(count, 32)
