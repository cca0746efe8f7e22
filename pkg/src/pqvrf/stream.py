"""Long VRF output streams for statistical evaluation.

Running tens of thousands of full ledger rounds is needlessly slow for a
statistics run, so seeds here are produced with the contract's seed formula
(weighted contribution sum, combined hash of three block hashes, sender
address) over synthetic contributions, all hashed in batch. The output stage
is the worker's batch path, which is bit-identical to the per-round path.
"""

from __future__ import annotations

import numpy as np

from .keccak import keccak256, keccak256_batch
from .rlwe import RlweKeyPair
from .worker import batch_vrf_outputs

SHARE_MASK = 0xFFFF


def _rows(label: bytes, tag: bytes, start: int, count: int, inner: int) -> np.ndarray:
    """keccak(label ‖ tag ‖ r ‖ i) for the given rounds r and i < inner; shape (count, inner, 32)."""
    r = np.repeat(np.arange(start, start + count, dtype=">u8"), inner).view(np.uint8).reshape(-1, 8)
    i = np.tile(np.arange(inner, dtype=">u2"), count).view(np.uint8).reshape(-1, 2)
    head = np.frombuffer(label + tag, dtype=np.uint8)
    msg = np.concatenate((np.broadcast_to(head, (r.shape[0], head.size)), r, i), axis=1)
    return keccak256_batch(msg).reshape(count, inner, 32)


def simulated_seeds(count: int, participants: int = 5, label: bytes = b"pqvrf-stream", start: int = 0) -> np.ndarray:
    """``(count, 32)`` seeds for rounds start..start+count-1, following the on-chain derivation rule."""
    key = keccak256(label)
    contrib = _rows(key, b"C", start, count, participants)
    shares = _rows(key, b"S", start, count, participants)
    blocks = _rows(key, b"B", start, count, 3)
    combined = keccak256_batch(blocks[:, ::-1].reshape(count, 96))
    senders = np.stack([np.frombuffer(keccak256(key + b"A" + bytes([i]))[-20:], dtype=np.uint8) for i in range(participants)])

    ws = np.empty((count, 32), dtype=np.uint8)
    mask = (1 << 256) - 1
    for r in range(count):
        total = 0
        for i in range(participants):
            c = int.from_bytes(contrib[r, i].tobytes(), "big")
            s = 1 + (int.from_bytes(shares[r, i, :2].tobytes(), "big") & SHARE_MASK)
            total += c * s
        ws[r] = np.frombuffer((total & mask).to_bytes(32, "big"), dtype=np.uint8)
    sender_rows = senders[np.arange(start, start + count) % participants]
    return keccak256_batch(np.concatenate((combined, sender_rows, ws), axis=1))


def output_stream(
    keys: RlweKeyPair, outputs: int, participants: int = 5, label: bytes = b"pqvrf-stream", start: int = 0, chunk: int = 1024
) -> bytes:
    """Concatenated 32-byte VRF outputs for consecutive simulated rounds."""
    seeds = simulated_seeds(outputs, participants, label, start)
    return batch_vrf_outputs(seeds, keys, chunk).tobytes()


class StreamReader:
    """Callable byte source over successive rounds, for :func:`run_suite`."""

    def __init__(self, keys: RlweKeyPair, participants: int = 5, label: bytes = b"pqvrf-stream") -> None:
        self.keys = keys
        self.participants = participants
        self.label = label
        self.rounds = 0

    def __call__(self, nbytes: int) -> bytes:
        count = -(-nbytes // 32)
        data = output_stream(self.keys, count, self.participants, self.label, self.rounds)
        self.rounds += count
        return data[:nbytes]
