"""Off-chain worker: seed expansion, derandomized RLWE, signing, submission."""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .delegation import DelegationError, DelegationPackage, OffchainKeys, did_for, offchain_sign
from .group import GroupParams, decode_element
from .keccak import keccak256, keccak256_batch
from .ledger import EVENT_SEED_READY, Ledger, LedgerError, LedgerEvent, Receipt
from .ringsig import Ring, RingMember, VrfProof
from .rlwe import ByteSource, RlweKeyPair, RlweParams, get_params, rlwe_enc2, sampler_for, serialize_halves
from .rlwe.ntt import ntt_forward
from .rlwe.scheme import serialize_poly

log = logging.getLogger("pqvrf.worker")

MSG_LABEL = b"msg"
ERR_LABEL = b"err"
SUCCESS_LINE = "Result and proof submitted successfully!"
FAILURE_LINE = "Submission failed."


def _counter(i: int) -> bytes:
    return i.to_bytes(4, "big")


def secret_context(keys: RlweKeyPair) -> bytes:
    """32-byte digest of the RLWE secret that keys the error stream."""
    return keccak256(b"pqvrf-rlwe-sk" + serialize_poly(keys.r2))


def message_bits(seed: bytes, n: int) -> list[int]:
    blocks = b"".join(keccak256(bytes(seed) + MSG_LABEL + _counter(i)) for i in range(-(-n // 256)))
    bits = np.unpackbits(np.frombuffer(blocks, dtype=np.uint8))
    return bits[:n].astype(int).tolist()


def error_blocks(seed: bytes, sk_context: bytes) -> Iterator[bytes]:
    prefix = bytes(seed) + bytes(sk_context) + ERR_LABEL
    i = 0
    while True:
        yield keccak256(prefix + _counter(i))
        i += 1


@dataclass(frozen=True)
class SeedExpansion:
    seed: bytes
    sk_context: bytes
    message_bits: tuple[int, ...]

    def error_stream(self) -> ByteSource:
        """A fresh reader positioned at the start of the error stream."""
        return ByteSource(error_blocks(self.seed, self.sk_context))


def expand_seed(seed: bytes, sk_context: bytes, params: RlweParams) -> SeedExpansion:
    return SeedExpansion(bytes(seed), bytes(sk_context), tuple(message_bits(seed, params.n)))


def rlwe_processing(seed: bytes, keys: RlweKeyPair, params: RlweParams | None = None) -> tuple[bytes, bytes]:
    params = params or keys.params
    exp = expand_seed(seed, secret_context(keys), params)
    ct = rlwe_enc2(keys.a, keys.p, exp.message_bits, exp.error_stream())
    return serialize_halves(ct)


def vrf_output_of(c1: bytes, c2: bytes) -> bytes:
    return keccak256(bytes(c1) + bytes(c2))


# --- batch path ---------------------------------------------------------------


def _batch_slots(seeds: np.ndarray, sk_context: bytes, blocks: int, slot_bytes: int) -> np.ndarray:
    b = seeds.shape[0]
    tail = np.frombuffer(bytes(sk_context) + ERR_LABEL, dtype=np.uint8)
    ctrs = np.arange(blocks, dtype=">u4").view(np.uint8).reshape(blocks, 4)
    msg = np.empty((b, blocks, 32 + tail.size + 4), dtype=np.uint8)
    msg[:, :, :32] = seeds[:, None, :]
    msg[:, :, 32:32 + tail.size] = tail
    msg[:, :, 32 + tail.size:] = ctrs
    stream = keccak256_batch(msg.reshape(b * blocks, -1)).reshape(b, blocks * 32)
    usable = (blocks * 32 // slot_bytes) * slot_bytes
    return stream[:, :usable].reshape(b, -1, slot_bytes)


def batch_ciphertexts(seeds: np.ndarray, keys: RlweKeyPair, chunk: int = 1024) -> np.ndarray:
    """Serialized ciphertexts ``(B, 4N)`` for a ``(B, 32)`` array of seeds.

    Bit-identical to :func:`rlwe_processing` row by row; rows whose error
    stream needs more slots than the batch prefetch are redone on the scalar path.
    """
    params = keys.params
    n, q = params.n, params.q
    sampler = sampler_for(params)
    ctx = secret_context(keys)
    need = 3 * n
    blocks = -(-(need + 8) * sampler.slot_bytes // 32)  # a few spare slots
    seeds = np.ascontiguousarray(seeds, dtype=np.uint8)
    a = keys.a.coeffs
    p = keys.p.coeffs
    out = np.empty((seeds.shape[0], 4 * n), dtype=np.uint8)
    msg_blocks = -(-n // 256)
    for start in range(0, seeds.shape[0], chunk):
        s = seeds[start:start + chunk]
        b = s.shape[0]
        m_in = np.empty((b, msg_blocks, 32 + len(MSG_LABEL) + 4), dtype=np.uint8)
        m_in[:, :, :32] = s[:, None, :]
        m_in[:, :, 32:35] = np.frombuffer(MSG_LABEL, dtype=np.uint8)
        m_in[:, :, 35:] = np.arange(msg_blocks, dtype=">u4").view(np.uint8).reshape(msg_blocks, 4)
        m_bytes = keccak256_batch(m_in.reshape(b * msg_blocks, -1)).reshape(b, -1)
        bits = np.unpackbits(m_bytes, axis=1)[:, :n].astype(np.int64)

        values, ok = sampler.decode_slots(_batch_slots(s, ctx, blocks, sampler.slot_bytes))
        enough = ok.sum(axis=1) >= need
        # stable sort puts accepted slots first, in stream order
        order = np.argsort(~ok, axis=1, kind="stable")[:, :need]
        errs = np.take_along_axis(values, order, axis=1).reshape(b, 3, n)
        e1, e2, e3 = errs[:, 0] % q, errs[:, 1] % q, (errs[:, 2] + bits * params.half_q) % q
        e1h, e2h, e3h = (ntt_forward(e, params) for e in (e1, e2, e3))
        c1 = (e2h + a * e1h) % q
        c2 = (e3h + p * e1h) % q
        rows = np.ascontiguousarray(np.concatenate((c1, c2), axis=1).astype("<u2")).view(np.uint8)
        for i in np.flatnonzero(~enough):
            h1, h2 = rlwe_processing(bytes(s[i]), keys)
            rows[i] = np.frombuffer(h1 + h2, dtype=np.uint8)
        out[start:start + b] = rows
    return out


def batch_vrf_outputs(seeds: np.ndarray, keys: RlweKeyPair, chunk: int = 1024) -> np.ndarray:
    """VRF outputs ``(B, 32)`` for a ``(B, 32)`` seed array."""
    outs = []
    for start in range(0, len(seeds), chunk):
        outs.append(keccak256_batch(batch_ciphertexts(seeds[start:start + chunk], keys, chunk)))
    return np.concatenate(outs) if outs else np.empty((0, 32), dtype=np.uint8)


# --- listener -----------------------------------------------------------------


@dataclass
class WorkerConfig:
    rlwe_params: str
    offchain: OffchainKeys
    rlwe_keys: RlweKeyPair
    ledger: Ledger
    poll_interval: float = 0.05
    max_backoff: float = 1.0
    deterministic: bool = True
    literal: bool = False
    # fault injection: rewrites (c1, c2, proof) just before submission
    submission_filter: Callable | None = None

    def __post_init__(self) -> None:
        if get_params(self.rlwe_params) != self.rlwe_keys.params:
            raise ValueError("RLWE key pair does not use the configured parameter set")


@dataclass
class HandleOutcome:
    round_id: int
    receipt: Receipt | None
    vrf_output: bytes | None = None
    error: str | None = None
    c1: bytes | None = None
    c2: bytes | None = None
    proof: VrfProof | None = None


def parse_seed_event(params: GroupParams, ev: LedgerEvent) -> tuple[int, bytes, Ring, list[DelegationPackage | str]]:
    """Unpack a seed event; packages that fail to parse come back as error strings."""
    el = params.element_len
    ring_bytes = bytes.fromhex(ev.get("ring"))
    pks = [decode_element(params, ring_bytes[i:i + el]) for i in range(0, len(ring_bytes), el)]
    ring = Ring(tuple(RingMember(did_for(params, pk), pk) for pk in pks))
    pkgs: list[DelegationPackage | str] = []
    for i, h in enumerate(x for x in ev.get("sk_enc").split(",") if x):
        try:
            pkgs.append(DelegationPackage.from_bytes(params, bytes.fromhex(h)))
        except ValueError as exc:
            pkgs.append(f"package #{i} unreadable: {exc}")
    return int(ev.get("round_id"), 16), bytes.fromhex(ev.get("seed")), ring, pkgs


class Worker:
    def __init__(self, cfg: WorkerConfig) -> None:
        self.cfg = cfg
        self.cursor = 0
        self.outcomes: list[HandleOutcome] = []
        self._busy = threading.Lock()

    def handle_event(self, ev: LedgerEvent) -> HandleOutcome:
        if ev.kind != EVENT_SEED_READY:
            raise ValueError(f"worker does not handle {ev.kind} events")
        if not self._busy.acquire(blocking=False):
            raise RuntimeError("handle_event is not re-entrant")
        try:
            outcome = self._handle(ev)
        finally:
            self._busy.release()
        self.outcomes.append(outcome)
        return outcome

    def _handle(self, ev: LedgerEvent) -> HandleOutcome:
        cfg = self.cfg
        params = cfg.ledger.params
        t0 = time.perf_counter()
        try:
            round_id, seed, ring, pkgs = parse_seed_event(params, ev)
        except (ValueError, KeyError) as exc:
            log.warning("round=? malformed seed event: %s", exc)
            return HandleOutcome(-1, None, error=f"malformed event: {exc}")

        c1, c2 = rlwe_processing(seed, cfg.rlwe_keys)
        vrf_output = vrf_output_of(c1, c2)

        proof, problems = None, []
        for pkg in pkgs:
            if isinstance(pkg, str):
                problems.append(pkg)
                continue
            try:
                proof = offchain_sign(params, cfg.offchain.sk_off, pkg, seed, vrf_output, ring, round_id, cfg.literal)
                break
            except (DelegationError, ValueError) as exc:
                problems.append(f"package {pkg.delegator_index}: {exc}")
        if proof is None:
            reason = "; ".join(problems) or "no delegation package"
            log.warning("round=%d refusing to sign: %s", round_id, reason)
            return HandleOutcome(round_id, None, vrf_output, error=reason)

        if cfg.submission_filter is not None:
            c1, c2, proof = cfg.submission_filter(c1, c2, proof)
        try:
            receipt = cfg.ledger.submit_rlwe_result(c1, c2, proof)
        except LedgerError as exc:
            log.warning("round=%d %s (%s)", round_id, FAILURE_LINE, exc)
            return HandleOutcome(round_id, None, vrf_output, str(exc), c1, c2, proof)
        elapsed = time.perf_counter() - t0
        if receipt.status == 1:
            log.info("round=%d phase=%s status=1 %.3fs %s", round_id, cfg.ledger.state.phase.name, elapsed, SUCCESS_LINE)
        else:
            log.warning("round=%d status=0 %.3fs %s (%s)", round_id, elapsed, FAILURE_LINE, receipt.reason)
        return HandleOutcome(round_id, receipt, vrf_output, None, c1, c2, proof)

    def poll_once(self) -> list[HandleOutcome]:
        done = []
        for ev in self.cfg.ledger.events_since(self.cursor):
            self.cursor = ev.index + 1
            if ev.kind == EVENT_SEED_READY:
                done.append(self.handle_event(ev))
        return done

    def run_listener(self, stop: threading.Event, max_retries: int | None = None) -> None:
        """Poll until ``stop`` is set. Ledger read errors back off and retry."""
        backoff = self.cfg.poll_interval
        failures = 0
        while not stop.is_set():
            try:
                self.poll_once()
            except LedgerError as exc:
                failures += 1
                if max_retries is not None and failures > max_retries:
                    raise
                log.warning("ledger error, retrying in %.2fs: %s", backoff, exc)
                stop.wait(backoff)
                backoff = min(2 * backoff, self.cfg.max_backoff)
                continue
            failures = 0
            backoff = self.cfg.poll_interval
            stop.wait(self.cfg.poll_interval)


@dataclass
class ListenerThread:
    worker: Worker
    stop: threading.Event = field(default_factory=threading.Event)
    thread: threading.Thread | None = None

    def start(self) -> "ListenerThread":
        self.thread = threading.Thread(target=self.worker.run_listener, args=(self.stop,), daemon=True)
        self.thread.start()
        return self

    def shutdown(self, timeout: float | None = None) -> bool:
        self.stop.set()
        if self.thread is not None:
            self.thread.join(timeout)
            return not self.thread.is_alive()
        return True
