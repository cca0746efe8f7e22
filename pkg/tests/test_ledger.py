import dataclasses
import json

import pytest

from pqvrf.drbg import KeccakDrbg
from pqvrf.group import encode_scalar, group_exp
from pqvrf.keccak import keccak256
from pqvrf.ledger import (
    EVENT_FINISHED,
    EVENT_SEED_READY,
    Ledger,
    LedgerConfig,
    LedgerError,
    Phase,
    PhaseError,
    RevealRejected,
    SimChain,
    Transaction,
    canonical_state,
    commitment_digest,
    compute_seed,
    min_threshold,
    weighted_sum,
)
from pqvrf.protocol import RoundDriver
from pqvrf.ringsig import VrfProof


def driver(km, seed=b"ledger", **kw):
    return RoundDriver(km, KeccakDrbg(seed), chain_seed=seed, **kw)


def test_chain_needs_three_blocks():
    chain = SimChain.genesis(b"x")
    with pytest.raises(LedgerError):
        chain.combined_hash()
    chain = chain.mine(0, 3)
    b = chain.blocks
    assert chain.combined_hash() == keccak256(b[-1] + b[-2] + b[-3])


def test_weighted_sum_wraps_mod_2_256():
    big = (1 << 256) - 1
    assert weighted_sum([(big, 2), (1, 3)]) == (2 * big + 3) % (1 << 256)
    assert min_threshold(1) == 1 and min_threshold(5) == 4 and min_threshold(4) == 3


def test_full_round_emits_events_and_receipt(km_toy):
    d = driver(km_toy)
    res = d.run_round()
    assert res.status == 1
    kinds = [ev.kind for ev in d.ledger.state.event_log]
    assert kinds == [EVENT_SEED_READY, EVENT_FINISHED]
    assert d.phase == Phase.FINISHED
    fin = d.finished_events()[0]
    assert int(fin.get("round_id"), 16) == res.round_id
    pi = VrfProof.from_bytes(km_toy.group, bytes.fromhex(fin.get("pi")))
    assert pi.seed == res.seed


def test_seed_is_pure_function_of_inputs(km_toy):
    a, b = driver(km_toy, b"same"), driver(km_toy, b"same")
    assert a.run_round().seed == b.run_round().seed
    st, chain = a.ledger.state, a.ledger.chain
    sender = a.addresses[1]
    assert compute_seed(st, chain, sender) == compute_seed(st, chain, sender)
    assert compute_seed(st, chain, sender) != compute_seed(st, chain, a.addresses[2])
    assert compute_seed(st, chain.mine(7), sender) != compute_seed(st, chain, sender)


def test_reveal_rules(km_toy):
    d = driver(km_toy)
    contribs = d.open_and_commit()
    with pytest.raises(LedgerError, match="0 reveals"):
        d.ledger.derive_seed(d.addresses[0])
    c = contribs[0]
    with pytest.raises(RevealRejected):
        d.ledger.reveal(d.addresses[0], c.contribution + 1, c.share, c.salt)
    assert d.ledger.state.flagged == (d.addresses[0],)
    d.ledger.reveal(d.addresses[0], c.contribution, c.share, c.salt)
    with pytest.raises(RevealRejected, match="already"):
        d.ledger.reveal(d.addresses[0], c.contribution, c.share, c.salt)
    with pytest.raises(LedgerError, match="threshold"):
        d.ledger.derive_seed(d.addresses[0])
    with pytest.raises(LedgerError):
        d.ledger.reveal(b"\x00" * 20, 1, 1, bytes(32))


def test_threshold_allows_missing_reveals(km_toy):
    d = driver(km_toy, threshold=4)
    assert d.run_round(skip=(3,)).status == 1
    d2 = driver(km_toy, threshold=4)
    contribs = d2.open_and_commit()
    d2.reveal(contribs, skip=(3, 4))
    with pytest.raises(LedgerError):
        d2.seed()


def test_bad_threshold_refused(km_toy):
    with pytest.raises(LedgerError):
        driver(km_toy, threshold=2).open_and_commit()


def test_phase_gates(km_toy):
    d = driver(km_toy)
    with pytest.raises(PhaseError):
        d.ledger.commit(d.addresses[0], bytes(32))
    d.run_round()
    with pytest.raises(PhaseError):
        d.ledger.register(b"\x01" * 20, km_toy.participants[0].onchain.pk, km_toy.participants[0].onchain.pk)
    res = d.worker.outcomes[-1]
    with pytest.raises(PhaseError):
        d.ledger.submit_rlwe_result(res.c1, res.c2, res.proof)


def test_tampered_submissions_get_status_zero(km_toy):
    def flip(blob, i=0):
        return blob[:i] + bytes([blob[i] ^ 1]) + blob[i + 1:]

    cases = {
        "c1": lambda c1, c2, pi: (flip(c1), c2, pi),
        "c2": lambda c1, c2, pi: (c1, flip(c2, 17), pi),
        "seed": lambda c1, c2, pi: (c1, c2, VrfProof(pi.vrf_output, flip(pi.seed), pi.sigma)),
        "output": lambda c1, c2, pi: (c1, c2, VrfProof(flip(pi.vrf_output), pi.seed, pi.sigma)),
        "sigma": lambda c1, c2, pi: (
            c1,
            c2,
            VrfProof(pi.vrf_output, pi.seed, dataclasses.replace(pi.sigma, responses=(1,) + pi.sigma.responses[1:])),
        ),
    }
    for name, filt in cases.items():
        d = driver(km_toy, b"tamper-" + name.encode(), submission_filter=filt)
        res = d.run_round()
        assert res.status == 0, name
        assert d.phase == Phase.SEED_READY
        assert not d.finished_events()


def test_revoke_delegation(km_toy):
    d = driver(km_toy)
    g = km_toy.group
    new_pk = group_exp(g, g.generator_g, 987654321)
    with pytest.raises(LedgerError, match="only the participant"):
        d.ledger.revoke_delegation(d.addresses[1], 0, new_pk)
    d.ledger.revoke_delegation(d.addresses[0], 0, new_pk)
    assert d.ledger.state.participants[0].pk_delegation == new_pk
    with pytest.raises(LedgerError):
        d.ledger.revoke_delegation(d.addresses[1], 1, new_pk)


def test_replay_reconstructs_state(km_toy):
    d = driver(km_toy)
    for _ in range(3):
        assert d.run_round().status == 1
    log = d.ledger.dump_log()
    again = Ledger.replay(log)
    assert canonical_state(again.state, again.chain) == canonical_state(d.ledger.state, d.ledger.chain)
    rows = log.splitlines()
    assert json.loads(rows[0])["group"] == "toy64"
    tx_rows = [r for r in rows if "tx" in json.loads(r)]
    assert len(tx_rows) == len(d.ledger.journal)


def test_replay_detects_edited_events(km_toy):
    d = driver(km_toy)
    d.run_round()
    log = d.ledger.dump_log()
    last = log.splitlines()[-1]
    edited = log.replace(last, last.replace('"ComputationFinished"', '"Other"'))
    with pytest.raises(LedgerError):
        Ledger.replay(edited)
    with pytest.raises(LedgerError):
        Ledger.replay("")


def test_transaction_lines_round_trip():
    tx = Transaction("commit", (("address", "00"), ("commitment", "ff")))
    assert Transaction.from_line(tx.to_line()) == tx
    cfg = LedgerConfig("toy64", 3, b"abc")
    assert LedgerConfig.from_line(cfg.to_line()) == cfg


def test_commitment_binds_all_fields():
    salt = bytes(32)
    base = commitment_digest(5, 7, salt)
    assert base != commitment_digest(5, 8, salt)
    assert base != commitment_digest(6, 7, salt)
    assert base != commitment_digest(5, 7, b"\x01" + salt[1:])


def test_state_never_holds_delegated_secret(km_toy):
    d = driver(km_toy)
    for _ in range(3):
        d.run_round()
    text = canonical_state(d.ledger.state, d.ledger.chain) + d.ledger.dump_log()
    g = km_toy.group
    for k in km_toy.participants:
        assert encode_scalar(g, k.delegation.sk).hex() not in text
