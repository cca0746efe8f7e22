"""In-process simulation of the VRF contract.

State is an immutable :class:`ContractState`; every mutation is a
:class:`Transaction` folded in by :func:`apply_transaction`. The ledger keeps
the accepted transactions in a journal, so replaying the journal from the
genesis configuration rebuilds the state (and the emitted events) exactly.
"""

from __future__ import annotations

import enum
import json
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from .delegation import DelegationPackage, did_for
from .group import GroupParams, decode_element, encode_element, get_group
from .keccak import keccak256
from .ringsig import Ring, RingMember, VrfProof, ring_verify

ADDRESS_LEN = 20
MIN_BLOCKS_FOR_SEED = 3


class LedgerError(RuntimeError):
    pass


class PhaseError(LedgerError):
    pass


class RevealRejected(LedgerError):
    pass


class Phase(enum.IntEnum):
    REGISTRATION = 0
    COMMIT = 1
    REVEAL = 2
    SEED_READY = 3
    SUBMITTED = 4
    FINISHED = 5
    ABORTED = 6


EVENT_SEED_READY = "OnchainMpcSeedReady"
EVENT_FINISHED = "ComputationFinished"


def address_of(params: GroupParams, pk: int) -> bytes:
    return keccak256(encode_element(params, pk))[-ADDRESS_LEN:]


def commitment_digest(contribution: int, share: int, salt: bytes) -> bytes:
    return keccak256(contribution.to_bytes(32, "big") + share.to_bytes(32, "big") + bytes(salt))


def weighted_sum(reveals: Iterable[tuple[int, int]]) -> int:
    return sum(c * s for c, s in reveals) % (1 << 256)


def min_threshold(n: int) -> int:
    return min(n, -(-n // 2) + 1)


@dataclass(frozen=True)
class SimChain:
    blocks: tuple[bytes, ...]

    @classmethod
    def genesis(cls, chain_seed: bytes) -> "SimChain":
        return cls((keccak256(b"pqvrf-genesis" + bytes(chain_seed)),))

    def mine(self, round_id: int, count: int = 1) -> "SimChain":
        blocks = list(self.blocks)
        for _ in range(count):
            k = len(blocks) - 1
            blocks.append(keccak256(blocks[-1] + round_id.to_bytes(8, "big") + k.to_bytes(8, "big")))
        return SimChain(tuple(blocks))

    def combined_hash(self) -> bytes:
        if len(self.blocks) < MIN_BLOCKS_FOR_SEED:
            raise LedgerError("need at least 3 block hashes to derive a seed")
        return keccak256(self.blocks[-1] + self.blocks[-2] + self.blocks[-3])


@dataclass(frozen=True)
class Participant:
    address: bytes
    pk: int
    pk_delegation: int


@dataclass(frozen=True)
class Reveal:
    contribution: int
    share: int
    salt: bytes


@dataclass(frozen=True)
class LedgerEvent:
    index: int
    kind: str
    payload: tuple[tuple[str, str], ...]  # (field, hex) pairs

    def get(self, name: str) -> str:
        return dict(self.payload)[name]

    def to_line(self) -> str:
        return json.dumps({"index": self.index, "kind": self.kind, **dict(self.payload)}, sort_keys=True)


@dataclass(frozen=True)
class Receipt:
    status: int
    round_id: int
    reason: str = "ok"


@dataclass(frozen=True)
class ContractState:
    group_name: str
    threshold: int | None = None  # None means every registered participant
    round_id: int = 0
    phase: Phase = Phase.REGISTRATION
    participants: tuple[Participant, ...] = ()
    commitments: Mapping[bytes, bytes] = field(default_factory=dict)
    reveals: Mapping[bytes, Reveal] = field(default_factory=dict)
    flagged: tuple[bytes, ...] = ()
    seed: bytes | None = None
    delegation_packages: tuple[DelegationPackage, ...] = ()
    event_log: tuple[LedgerEvent, ...] = ()

    @property
    def params(self) -> GroupParams:
        return get_group(self.group_name)

    def ring(self) -> Ring:
        params = self.params
        return Ring(tuple(RingMember(did_for(params, p.pk_delegation), p.pk_delegation) for p in self.participants))

    def index_of(self, address: bytes) -> int:
        for i, p in enumerate(self.participants):
            if p.address == address:
                return i
        raise LedgerError(f"unknown participant {bytes(address).hex()}")

    def required_reveals(self) -> int:
        return len(self.participants) if self.threshold is None else self.threshold

    def _emit(self, kind: str, payload: Sequence[tuple[str, str]]) -> "ContractState":
        ev = LedgerEvent(len(self.event_log), kind, tuple(payload))
        return replace(self, event_log=self.event_log + (ev,))


def _require_phase(state: ContractState, *phases: Phase) -> None:
    if state.phase not in phases:
        names = "/".join(p.name for p in phases)
        raise PhaseError(f"operation needs phase {names}, contract is in {state.phase.name}")


def register_participant(state: ContractState, address: bytes, pk: int, pk_delegation: int) -> ContractState:
    _require_phase(state, Phase.REGISTRATION)
    params = state.params
    if not (params.is_element(pk) and params.is_element(pk_delegation)):
        raise LedgerError("public keys must be subgroup elements")
    if any(p.address == address for p in state.participants):
        raise LedgerError("address already registered")
    if any(p.pk_delegation == pk_delegation for p in state.participants):
        raise LedgerError("delegation key already registered")
    return replace(state, participants=state.participants + (Participant(bytes(address), pk, pk_delegation),))


def open_round(state: ContractState) -> ContractState:
    """Close registration (or a finished round) and start collecting commitments."""
    _require_phase(state, Phase.REGISTRATION, Phase.FINISHED, Phase.ABORTED)
    if not state.participants:
        raise LedgerError("no participants registered")
    if state.threshold is not None and not min_threshold(len(state.participants)) <= state.threshold <= len(state.participants):
        raise LedgerError("reveal threshold outside the allowed range")
    round_id = state.round_id if state.phase == Phase.REGISTRATION else state.round_id + 1
    return replace(
        state,
        round_id=round_id,
        phase=Phase.COMMIT,
        commitments={},
        reveals={},
        flagged=(),
        seed=None,
        delegation_packages=(),
    )


def commit_share(state: ContractState, address: bytes, commitment: bytes) -> ContractState:
    _require_phase(state, Phase.COMMIT)
    state.index_of(address)
    if address in state.commitments:
        raise LedgerError("participant already committed this round")
    if len(commitment) != 32:
        raise LedgerError("commitment must be a 32-byte digest")
    return replace(state, commitments={**state.commitments, bytes(address): bytes(commitment)})


def submit_delegation(state: ContractState, address: bytes, pkg: DelegationPackage) -> ContractState:
    _require_phase(state, Phase.COMMIT, Phase.REVEAL)
    if state.index_of(address) != pkg.delegator_index:
        raise LedgerError("package delegator index does not match the sender")
    if any(p.delegator_index == pkg.delegator_index for p in state.delegation_packages):
        raise LedgerError("participant already delegated this round")
    return replace(state, delegation_packages=state.delegation_packages + (pkg,))


def close_commit(state: ContractState) -> ContractState:
    _require_phase(state, Phase.COMMIT)
    if len(state.commitments) < state.required_reveals():
        raise LedgerError("not enough commitments to open the reveal phase")
    return replace(state, phase=Phase.REVEAL)


def check_reveal(state: ContractState, address: bytes, contribution: int, share: int, salt: bytes) -> str | None:
    """Return why a reveal is invalid, or None."""
    if address not in state.commitments:
        return "no commitment on record"
    if address in state.reveals:
        return "already revealed"
    if share < 1:
        return "share must be positive"
    if not (0 <= contribution < 1 << 256 and share < 1 << 256 and len(salt) == 32):
        return "reveal fields out of range"
    if commitment_digest(contribution, share, salt) != state.commitments[address]:
        return "reveal does not match commitment"
    return None


def reveal_share(state: ContractState, address: bytes, contribution: int, share: int, salt: bytes) -> ContractState:
    _require_phase(state, Phase.REVEAL)
    state.index_of(address)
    problem = check_reveal(state, address, contribution, share, salt)
    if problem:
        raise RevealRejected(problem)
    return replace(state, reveals={**state.reveals, bytes(address): Reveal(contribution, share, bytes(salt))})


def flag_participant(state: ContractState, address: bytes) -> ContractState:
    if address in state.flagged:
        return state
    return replace(state, flagged=state.flagged + (bytes(address),))


def compute_seed(state: ContractState, chain: SimChain, sender: bytes) -> bytes:
    ws = weighted_sum((r.contribution, r.share) for r in state.reveals.values())
    return keccak256(chain.combined_hash() + bytes(sender) + ws.to_bytes(32, "big"))


def ordered_packages(state: ContractState, sender: bytes) -> tuple[DelegationPackage, ...]:
    """Sender's own package first (the designated delegator), the rest by index."""
    idx = state.index_of(sender)
    pkgs = sorted(state.delegation_packages, key=lambda p: (p.delegator_index != idx, p.delegator_index))
    return tuple(pkgs)


def derive_seed(state: ContractState, chain: SimChain, sender: bytes) -> tuple[ContractState, bytes]:
    _require_phase(state, Phase.REVEAL)
    state.index_of(sender)
    if len(state.reveals) < state.required_reveals():
        raise LedgerError(f"{len(state.reveals)} reveals, threshold is {state.required_reveals()}")
    seed = compute_seed(state, chain, sender)
    params = state.params
    ring_hex = "".join(encode_element(params, pk).hex() for pk in state.ring().pks)
    pkgs = ordered_packages(state, sender)
    payload = (
        ("round_id", state.round_id.to_bytes(8, "big").hex()),
        ("seed", seed.hex()),
        ("sender", bytes(sender).hex()),
        ("ring", ring_hex),
        ("sk_enc", ",".join(p.to_bytes(params).hex() for p in pkgs)),
    )
    state = replace(state, phase=Phase.SEED_READY, seed=seed)
    return state._emit(EVENT_SEED_READY, payload), seed


def onchain_verify(params: GroupParams, pi: VrfProof, ring: Ring) -> bool:
    return bool(ring_verify(params, pi, ring))


def evaluate_submission(state: ContractState, c1: bytes, c2: bytes, pi: VrfProof) -> str | None:
    if keccak256(bytes(c1) + bytes(c2)) != pi.vrf_output:
        return "vrf output does not hash the ciphertexts"
    if pi.seed != state.seed:
        return "proof seed is not this round's seed"
    result = ring_verify(state.params, pi, state.ring())
    if not result:
        return f"ring signature rejected ({result.reason})"
    return None


def submit_rlwe_result(state: ContractState, c1: bytes, c2: bytes, pi: VrfProof) -> tuple[ContractState, Receipt]:
    _require_phase(state, Phase.SEED_READY)
    problem = evaluate_submission(state, c1, c2, pi)
    if problem:
        return state, Receipt(0, state.round_id, problem)
    state = replace(state, phase=Phase.SUBMITTED)
    payload = (
        ("round_id", state.round_id.to_bytes(8, "big").hex()),
        ("pi", pi.to_bytes(state.params).hex()),
    )
    state = replace(state, phase=Phase.FINISHED)._emit(EVENT_FINISHED, payload)
    return state, Receipt(1, state.round_id)


def revoke_delegation(state: ContractState, caller: bytes, participant_index: int, new_pk_delegation: int) -> ContractState:
    if not 0 <= participant_index < len(state.participants):
        raise LedgerError("unknown participant")
    current = state.participants[participant_index]
    if current.address != caller:
        raise LedgerError("only the participant may replace its delegation key")
    if state.phase in (Phase.SEED_READY, Phase.SUBMITTED):
        raise PhaseError("cannot rotate keys while a seed is awaiting its result")
    if not state.params.is_element(new_pk_delegation):
        raise LedgerError("new delegation key is not a subgroup element")
    if any(p.pk_delegation == new_pk_delegation for p in state.participants):
        raise LedgerError("delegation key already registered")
    participants = list(state.participants)
    participants[participant_index] = replace(current, pk_delegation=new_pk_delegation)
    pkgs = tuple(p for p in state.delegation_packages if p.delegator_index != participant_index)
    return replace(state, participants=tuple(participants), delegation_packages=pkgs)


def abort_round(state: ContractState) -> ContractState:
    return replace(state, phase=Phase.ABORTED)


# --- journal -----------------------------------------------------------------


@dataclass(frozen=True)
class Transaction:
    kind: str
    fields: tuple[tuple[str, str], ...] = ()

    def get(self, name: str) -> str:
        return dict(self.fields)[name]

    def to_line(self) -> str:
        return json.dumps({"tx": self.kind, **dict(self.fields)}, sort_keys=True)

    @classmethod
    def from_line(cls, line: str) -> "Transaction":
        rec = json.loads(line)
        kind = rec.pop("tx")
        return cls(kind, tuple(sorted(rec.items())))


def _tx(kind: str, **fields: str) -> Transaction:
    return Transaction(kind, tuple(sorted(fields.items())))


def apply_transaction(state: ContractState, chain: SimChain, tx: Transaction) -> tuple[ContractState, SimChain, object]:
    """Fold one journal entry into (state, chain); the third item is the tx result."""
    params = state.params
    f = dict(tx.fields)
    addr = bytes.fromhex(f["address"]) if "address" in f else b""
    if tx.kind == "mine":
        return state, chain.mine(state.round_id, int(f["count"])), None
    if tx.kind == "register":
        pk = decode_element(params, bytes.fromhex(f["pk"]))
        pkd = decode_element(params, bytes.fromhex(f["pk_delegation"]))
        return register_participant(state, addr, pk, pkd), chain, None
    if tx.kind == "open_round":
        return open_round(state), chain, None
    if tx.kind == "commit":
        return commit_share(state, addr, bytes.fromhex(f["commitment"])), chain, None
    if tx.kind == "delegate":
        pkg = DelegationPackage.from_bytes(params, bytes.fromhex(f["package"]))
        return submit_delegation(state, addr, pkg), chain, None
    if tx.kind == "close_commit":
        return close_commit(state), chain, None
    if tx.kind == "reveal":
        return reveal_share(state, addr, int(f["contribution"], 16), int(f["share"], 16), bytes.fromhex(f["salt"])), chain, None
    if tx.kind == "flag":
        return flag_participant(state, addr), chain, None
    if tx.kind == "derive_seed":
        state, seed = derive_seed(state, chain, addr)
        return state, chain, seed
    if tx.kind == "submit":
        pi = VrfProof.from_bytes(params, bytes.fromhex(f["pi"]))
        state, receipt = submit_rlwe_result(state, bytes.fromhex(f["c1"]), bytes.fromhex(f["c2"]), pi)
        return state, chain, receipt
    if tx.kind == "revoke":
        pk = decode_element(params, bytes.fromhex(f["pk_delegation"]))
        return revoke_delegation(state, addr, int(f["index"]), pk), chain, None
    if tx.kind == "abort":
        return abort_round(state), chain, None
    raise LedgerError(f"unknown transaction kind {tx.kind!r}")


@dataclass(frozen=True)
class LedgerConfig:
    group_name: str = "modp2048"
    threshold: int | None = None
    chain_seed: bytes = b"pqvrf"

    def to_line(self) -> str:
        return json.dumps(
            {"config": 1, "group": self.group_name, "threshold": self.threshold, "chain_seed": self.chain_seed.hex()},
            sort_keys=True,
        )

    @classmethod
    def from_line(cls, line: str) -> "LedgerConfig":
        rec = json.loads(line)
        return cls(rec["group"], rec["threshold"], bytes.fromhex(rec["chain_seed"]))


class Ledger:
    """Single-writer contract host with an event bus for subscribers.

    All writes pass through one lock; readers get immutable snapshots.
    """

    def __init__(self, config: LedgerConfig | None = None) -> None:
        self.config = config or LedgerConfig()
        self._state = ContractState(self.config.group_name, self.config.threshold)
        self._chain = SimChain.genesis(self.config.chain_seed)
        self._journal: list[Transaction] = []
        self._lock = threading.Lock()
        self._subscribers: list[Callable[[LedgerEvent], None]] = []

    @property
    def params(self) -> GroupParams:
        return self._state.params

    @property
    def state(self) -> ContractState:
        return self._state

    @property
    def chain(self) -> SimChain:
        return self._chain

    @property
    def journal(self) -> tuple[Transaction, ...]:
        return tuple(self._journal)

    def subscribe(self, callback: Callable[[LedgerEvent], None]) -> None:
        self._subscribers.append(callback)

    def events_since(self, cursor: int) -> tuple[LedgerEvent, ...]:
        return self._state.event_log[cursor:]

    def _apply(self, tx: Transaction):
        with self._lock:
            before = len(self._state.event_log)
            state, chain, result = apply_transaction(self._state, self._chain, tx)
            if state is not self._state or chain is not self._chain:
                self._journal.append(tx)
            self._state, self._chain = state, chain
            fresh = state.event_log[before:]
        for ev in fresh:
            for cb in list(self._subscribers):
                cb(ev)
        return result

    # transactions

    def mine(self, count: int = 1) -> None:
        self._apply(_tx("mine", count=str(count)))

    def register(self, address: bytes, pk: int, pk_delegation: int) -> None:
        p = self.params
        self._apply(_tx(
            "register",
            address=address.hex(),
            pk=encode_element(p, pk).hex(),
            pk_delegation=encode_element(p, pk_delegation).hex(),
        ))

    def open_round(self) -> int:
        self._apply(_tx("open_round"))
        return self._state.round_id

    def commit(self, address: bytes, commitment: bytes) -> None:
        self._apply(_tx("commit", address=address.hex(), commitment=bytes(commitment).hex()))

    def delegate(self, address: bytes, pkg: DelegationPackage) -> None:
        self._apply(_tx("delegate", address=address.hex(), package=pkg.to_bytes(self.params).hex()))

    def close_commit(self) -> None:
        self._apply(_tx("close_commit"))

    def reveal(self, address: bytes, contribution: int, share: int, salt: bytes) -> None:
        tx = _tx("reveal", address=address.hex(), contribution=f"{contribution:x}", share=f"{share:x}", salt=bytes(salt).hex())
        try:
            self._apply(tx)
        except RevealRejected:
            # the mismatch is recorded on-chain before the reveal is refused
            if address in self._state.commitments:
                self._apply(_tx("flag", address=address.hex()))
            raise

    def derive_seed(self, sender: bytes) -> bytes:
        return self._apply(_tx("derive_seed", address=sender.hex()))

    def submit_rlwe_result(self, c1: bytes, c2: bytes, pi: VrfProof) -> Receipt:
        tx = _tx("submit", c1=bytes(c1).hex(), c2=bytes(c2).hex(), pi=pi.to_bytes(self.params).hex())
        return self._apply(tx)

    def revoke_delegation(self, caller: bytes, participant_index: int, new_pk_delegation: int) -> None:
        pk_hex = encode_element(self.params, new_pk_delegation).hex()
        self._apply(_tx("revoke", address=caller.hex(), index=str(participant_index), pk_delegation=pk_hex))

    def abort(self) -> None:
        self._apply(_tx("abort"))

    # persistence

    def dump_log(self) -> str:
        """Config line, then journal lines, then event lines."""
        lines = [self.config.to_line()]
        lines += [tx.to_line() for tx in self._journal]
        lines += [ev.to_line() for ev in self._state.event_log]
        return "\n".join(lines) + "\n"

    @classmethod
    def replay(cls, log_text: str) -> "Ledger":
        rows = [ln for ln in log_text.splitlines() if ln.strip()]
        if not rows:
            raise LedgerError("empty log")
        ledger = cls(LedgerConfig.from_line(rows[0]))
        recorded = []
        for row in rows[1:]:
            if "tx" in json.loads(row):
                ledger._apply(Transaction.from_line(row))
            else:
                recorded.append(row)
        rebuilt = [ev.to_line() for ev in ledger.state.event_log]
        if recorded != rebuilt:
            raise LedgerError("replayed events differ from the recorded event log")
        return ledger


def canonical_state(state: ContractState, chain: SimChain | None = None) -> str:
    """Key-sorted text snapshot, stable across runs."""
    params = state.params
    doc = {
        "group": state.group_name,
        "threshold": state.threshold,
        "round_id": state.round_id,
        "phase": state.phase.name,
        "participants": [
            {
                "address": p.address.hex(),
                "pk": encode_element(params, p.pk).hex(),
                "pk_delegation": encode_element(params, p.pk_delegation).hex(),
            }
            for p in state.participants
        ],
        "commitments": {a.hex(): c.hex() for a, c in state.commitments.items()},
        "reveals": {
            a.hex(): {"contribution": f"{r.contribution:x}", "share": f"{r.share:x}", "salt": r.salt.hex()}
            for a, r in state.reveals.items()
        },
        "flagged": [a.hex() for a in state.flagged],
        "seed": state.seed.hex() if state.seed else None,
        "delegation_packages": [p.to_bytes(params).hex() for p in state.delegation_packages],
        "events": [json.loads(ev.to_line()) for ev in state.event_log],
    }
    if chain is not None:
        doc["blocks"] = [b.hex() for b in chain.blocks]
    return json.dumps(doc, sort_keys=True, indent=1)
