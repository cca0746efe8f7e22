"""Drives complete rounds: register, commit, reveal, seed, worker, submit."""

from __future__ import annotations

from dataclasses import dataclass

from .delegation import delegate_key
from .ledger import EVENT_FINISHED, Ledger, LedgerConfig, Phase, address_of, commitment_digest
from .vrf import VrfKeyMaterial
from .worker import HandleOutcome, Worker, WorkerConfig

SHARE_BITS = 16


@dataclass(frozen=True)
class Contribution:
    contribution: int
    share: int
    salt: bytes

    @property
    def commitment(self) -> bytes:
        return commitment_digest(self.contribution, self.share, self.salt)


@dataclass(frozen=True)
class RoundResult:
    round_id: int
    seed: bytes
    sender: bytes
    outcome: HandleOutcome

    @property
    def status(self) -> int:
        return self.outcome.receipt.status if self.outcome.receipt else 0


def draw_contribution(rng) -> Contribution:
    return Contribution(rng.getrandbits(256), 1 + rng.getrandbits(SHARE_BITS), rng.randbytes(32))


class RoundDriver:
    """Plays every participant against one ledger and one worker."""

    def __init__(
        self,
        km: VrfKeyMaterial,
        rng,
        threshold: int | None = None,
        chain_seed: bytes = b"pqvrf",
        literal: bool = False,
        submission_filter=None,
    ) -> None:
        self.km = km
        self.rng = rng
        self.ledger = Ledger(LedgerConfig(km.group_name, threshold, chain_seed))
        self.worker = Worker(
            WorkerConfig(
                km.rlwe_name, km.offchain, km.rlwe_keys, self.ledger, literal=literal, submission_filter=submission_filter
            )
        )
        g = km.group
        self.addresses = [address_of(g, k.onchain.pk) for k in km.participants]
        for addr, keys in zip(self.addresses, km.participants):
            self.ledger.register(addr, keys.onchain.pk, keys.delegation.pk)
        self.ledger.mine(3)

    def open_and_commit(self, delegators: list[int] | None = None) -> dict[int, Contribution]:
        """Open a round; every participant commits, the chosen ones also delegate."""
        ledger = self.ledger
        round_id = ledger.open_round()
        g = self.km.group
        contribs = {}
        for i, addr in enumerate(self.addresses):
            contribs[i] = draw_contribution(self.rng)
            ledger.commit(addr, contribs[i].commitment)
        for i in delegators if delegators is not None else range(len(self.addresses)):
            pkg = delegate_key(g, self.km.participants[i], i, self.km.offchain.pk_off, round_id, self.rng)
            ledger.delegate(self.addresses[i], pkg)
        ledger.close_commit()
        return contribs

    def reveal(self, contribs: dict[int, Contribution], skip: tuple[int, ...] = ()) -> None:
        for i, c in contribs.items():
            if i not in skip:
                self.ledger.reveal(self.addresses[i], c.contribution, c.share, c.salt)
        self.ledger.mine(1)

    def seed(self, sender_index: int | None = None) -> bytes:
        state = self.ledger.state
        if sender_index is None:
            sender_index = state.round_id % len(self.addresses)
        return self.ledger.derive_seed(self.addresses[sender_index])

    def run_round(
        self, sender_index: int | None = None, skip: tuple[int, ...] = (), delegators: list[int] | None = None
    ) -> RoundResult:
        contribs = self.open_and_commit(delegators)
        self.reveal(contribs, skip)
        seed = self.seed(sender_index)
        state = self.ledger.state
        ev = state.event_log[-1]
        outcomes = self.worker.poll_once()
        outcome = outcomes[-1] if outcomes else HandleOutcome(state.round_id, None, error="worker saw no event")
        return RoundResult(state.round_id, seed, bytes.fromhex(ev.get("sender")), outcome)

    def finished_events(self):
        return [ev for ev in self.ledger.state.event_log if ev.kind == EVENT_FINISHED]

    @property
    def phase(self) -> Phase:
        return self.ledger.state.phase
