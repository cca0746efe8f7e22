import pytest
from hypothesis import given
from hypothesis import strategies as st

from pqvrf.drbg import KeccakDrbg
from pqvrf.dleq import (
    DleqError,
    DleqProof,
    DleqStatement,
    commit,
    dleq_prove,
    dleq_verify,
    relations_hold,
    respond,
)
from pqvrf.group import get_group, group_exp, group_inv, group_mul
from pqvrf.keccak import keccak256
from pqvrf.ringsig import Ring, RingError, RingSig, VrfProof, challenge_hash, ring_sign, ring_verify

G = get_group("toy64")


def make_ring(n, seed=b"ring"):
    r = KeccakDrbg(seed)
    sks = [r.randrange(1, G.order_o) for _ in range(n)]
    return sks, Ring.from_pks([group_exp(G, G.generator_g, x) for x in sks])


def sign(sks, ring, idx, seed, out, rng=None, literal=False):
    return VrfProof(out, seed, ring_sign(G, sks[idx], idx, seed, out, ring, rng, literal))


@given(st.integers(1, 16), st.data(), st.binary(min_size=32, max_size=32), st.binary(min_size=32, max_size=32))
def test_completeness_and_sum_identity(n, data, seed, out):
    sks, ring = make_ring(n)
    idx = data.draw(st.integers(0, n - 1))
    pi = sign(sks, ring, idx, seed, out)
    assert ring_verify(G, pi, ring)
    sig = pi.sigma
    commitments = [
        group_mul(G, group_exp(G, G.generator_g, s), group_exp(G, pk, c))
        for s, c, pk in zip(sig.responses, sig.challenges, ring.pks)
    ]
    assert sum(sig.challenges) % G.order_o == challenge_hash(G, out, seed, commitments)


def _perturb_scalar(v):
    return (v + 1) % G.order_o


def test_single_field_tampering_rejected():
    sks, ring = make_ring(4)
    seed, out = keccak256(b"s"), keccak256(b"o")
    pi = sign(sks, ring, 2, seed, out)
    sig = pi.sigma
    variants = []
    for i in range(4):
        cs = list(sig.challenges)
        cs[i] = _perturb_scalar(cs[i])
        variants.append(VrfProof(out, seed, RingSig(tuple(cs), sig.responses)))
        ss = list(sig.responses)
        ss[i] = _perturb_scalar(ss[i])
        variants.append(VrfProof(out, seed, RingSig(sig.challenges, tuple(ss))))
    for pos in range(32):
        for bit in (0, 7):
            flip = bytearray(seed)
            flip[pos] ^= 1 << bit
            variants.append(VrfProof(out, bytes(flip), sig))
            flip = bytearray(out)
            flip[pos] ^= 1 << bit
            variants.append(VrfProof(bytes(flip), seed, sig))
    assert not any(ring_verify(G, v, ring) for v in variants)


def test_wrong_ring_and_malformed_inputs():
    sks, ring = make_ring(3)
    pi = sign(sks, ring, 1, b"\x01" * 32, b"\x02" * 32)
    _, other = make_ring(3, b"other")
    assert not ring_verify(G, pi, other)
    assert ring_verify(G, pi, ring.replace(0, other.pks[0])).ok is False
    assert ring_verify(G, VrfProof(pi.vrf_output[:31], pi.seed, pi.sigma), ring).reason == "malformed-digest"
    short = RingSig(pi.sigma.challenges[:2], pi.sigma.responses[:2])
    assert ring_verify(G, VrfProof(pi.vrf_output, pi.seed, short), ring).reason == "length-mismatch"
    big = RingSig((G.order_o,) + pi.sigma.challenges[1:], pi.sigma.responses)
    assert ring_verify(G, VrfProof(pi.vrf_output, pi.seed, big), ring).reason == "scalar-out-of-range"


def test_signer_must_own_position():
    sks, ring = make_ring(3)
    with pytest.raises(RingError):
        ring_sign(G, sks[0], 1, b"\x00" * 32, b"\x00" * 32, ring)
    with pytest.raises(RingError):
        ring_sign(G, sks[0], 5, b"\x00" * 32, b"\x00" * 32, ring)


def test_deterministic_nonces_and_random_nonces():
    sks, ring = make_ring(3)
    a = sign(sks, ring, 0, b"\x00" * 32, b"\x01" * 32)
    b = sign(sks, ring, 0, b"\x00" * 32, b"\x01" * 32)
    assert a == b
    c = sign(sks, ring, 0, b"\x00" * 32, b"\x01" * 32, rng=KeccakDrbg(b"x"))
    assert c != a and ring_verify(G, c, ring)


def test_generalized_signature_carries_no_group_element():
    sks, ring = make_ring(5)
    sizes = set()
    for idx in range(5):
        pi = sign(sks, ring, idx, b"\x03" * 32, b"\x04" * 32)
        assert pi.sigma.commitment_t is None
        sizes.add(len(pi.to_bytes(G)))
    assert len(sizes) == 1


def test_literal_layout():
    sks, ring = make_ring(3)
    pi = sign(sks, ring, 0, b"\x05" * 32, b"\x06" * 32, literal=True)
    assert pi.sigma.literal and pi.sigma.commitment_t is not None
    assert ring_verify(G, pi, ring)
    assert VrfProof.from_bytes(G, pi.to_bytes(G)) == pi
    with pytest.raises(RingError):
        ring_sign(G, sks[1], 1, b"\x05" * 32, b"\x06" * 32, ring, literal=True)
    bad_t = RingSig(pi.sigma.challenges, pi.sigma.responses, True, group_exp(G, G.generator_g, 3))
    assert ring_verify(G, VrfProof(pi.vrf_output, pi.seed, bad_t), ring).reason == "commitment-mismatch"


def test_proof_serialization_round_trip_and_rejects_garbage():
    sks, ring = make_ring(4)
    pi = sign(sks, ring, 3, b"\x07" * 32, b"\x08" * 32)
    blob = pi.to_bytes(G)
    assert VrfProof.from_bytes(G, blob) == pi
    with pytest.raises(ValueError):
        VrfProof.from_bytes(G, blob[:-1])
    with pytest.raises(ValueError):
        RingSig.from_bytes(G, b"\x09\x00\x00\x01")


def test_ring_lookup():
    _, ring = make_ring(3)
    assert ring.index_of(ring.pks[2]) == 2
    with pytest.raises(RingError):
        ring.index_of(12345)
    with pytest.raises(RingError):
        Ring.from_pks([])


# --- discrete-log equality -----------------------------------------------------------


def test_toy_worked_example_by_hand():
    p, o, g1, g2, x, r, c = 23, 11, 2, 4, 5, 3, 7
    # direct arithmetic first
    h1, h2 = pow(g1, x, p), pow(g2, x, p)
    t1, t2 = pow(g1, r, p), pow(g2, r, p)
    s = (r + c * x) % o
    assert (h1, h2, t1, t2, s) == (9, 12, 8, 18, 5)
    assert pow(g1, s, p) * pow(pow(h1, c, p), -1, p) % p == 8
    # then the library on the same numbers
    grp = get_group("toy23")
    stmt = DleqStatement(g1, g2, h1, h2)
    assert commit(grp, stmt, r) == (8, 18)
    assert respond(grp, x, r, c) == 5
    lhs1 = group_mul(grp, group_exp(grp, g1, 5), group_inv(grp, group_exp(grp, h1, c)))
    assert lhs1 == 8
    assert relations_hold(grp, stmt, 8, 18, c, 5)
    assert not relations_hold(grp, stmt, 8, 18, c, 6)


def _stmt(x, grp=G):
    return DleqStatement(grp.generator_g, grp.generator_h, group_exp(grp, grp.generator_g, x), group_exp(grp, grp.generator_h, x))


@given(st.integers(1, G.order_o - 1), st.binary(max_size=40))
def test_dleq_completeness(x, ctx):
    stmt = _stmt(x)
    proof = dleq_prove(G, x, stmt, ctx, KeccakDrbg(ctx))
    assert dleq_verify(G, stmt, proof)
    assert DleqProof.from_bytes(G, proof.to_bytes(G)) == proof


def test_dleq_binds_statement_and_context(rng):
    x = rng.randrange(1, G.order_o)
    stmt = _stmt(x)
    proof = dleq_prove(G, x, stmt, b"round-1", rng)
    assert not dleq_verify(G, stmt, DleqProof(proof.t1, proof.t2, proof.s, b"round-2"))
    other = _stmt(x + 1)
    assert not dleq_verify(G, other, proof)
    swapped = DleqStatement(stmt.g2, stmt.g1, stmt.h2, stmt.h1)
    assert not dleq_verify(G, swapped, proof)
    assert not dleq_verify(G, stmt, DleqProof(proof.t1, proof.t2, proof.s + G.order_o, proof.context))
    assert not dleq_verify(G, stmt, DleqProof(0, proof.t2, proof.s, proof.context))


def test_dleq_refuses_false_witness(rng):
    stmt = _stmt(5)
    with pytest.raises(DleqError):
        dleq_prove(G, 6, stmt, b"", rng)
    mixed = DleqStatement(G.generator_g, G.generator_h, group_exp(G, G.generator_g, 5), group_exp(G, G.generator_h, 6))
    with pytest.raises(DleqError):
        dleq_prove(G, 5, mixed, b"", rng)


def test_dleq_truncated_bytes():
    with pytest.raises(DleqError):
        DleqProof.from_bytes(G, b"\x00" * 5)
    good = dleq_prove(G, 9, _stmt(9), b"abc", KeccakDrbg(b"q")).to_bytes(G)
    with pytest.raises(DleqError):
        DleqProof.from_bytes(G, good + b"\x00")
