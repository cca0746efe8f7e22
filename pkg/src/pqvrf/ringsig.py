"""DID ring signatures binding (vrf_output, seed) to a ring of public keys.

Default ("generalized") mode is a 1-out-of-n Schnorr OR-proof: the signer's
slot j is secret, every slot's commitment is recomputed by the verifier as
``a_i = g^s_i * Y_i^c_i``, and the challenges must sum to the hash of all
commitments. Literal mode pins the signer to slot 0 and additionally ships
``T = g^t`` so that the hash input reads (vrf_output, seed, T, a_2..a_n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .drbg import KeccakDrbg
from .group import (
    GroupError,
    GroupParams,
    decode_element,
    decode_scalar,
    encode_element,
    encode_scalar,
    group_exp,
    group_mul,
    hash_to_scalar,
    random_scalar,
)
from .keccak import keccak256

SIG_VERSION = 1
MODE_GENERALIZED = 0
MODE_LITERAL = 1
CHALLENGE_TAG = b"ringsig-v1"


class RingError(ValueError):
    pass


@dataclass(frozen=True)
class RingMember:
    did: str
    pk: int


@dataclass(frozen=True)
class Ring:
    members: tuple[RingMember, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise RingError("ring must have at least one member")
        pks = [m.pk for m in self.members]
        if len(set(pks)) != len(pks):
            raise RingError("duplicate public key in ring")

    @classmethod
    def from_pks(cls, pks: Sequence[int], dids: Sequence[str] | None = None) -> "Ring":
        dids = dids or [f"did:pqvrf:{i}" for i in range(len(pks))]
        return cls(tuple(RingMember(d, pk) for d, pk in zip(dids, pks)))

    @property
    def pks(self) -> tuple[int, ...]:
        return tuple(m.pk for m in self.members)

    def __len__(self) -> int:
        return len(self.members)

    def index_of(self, pk: int) -> int:
        try:
            return self.pks.index(pk)
        except ValueError:
            raise RingError("public key is not a ring member") from None

    def replace(self, index: int, pk: int) -> "Ring":
        members = list(self.members)
        members[index] = RingMember(members[index].did, pk)
        return Ring(tuple(members))


@dataclass(frozen=True)
class RingSig:
    challenges: tuple[int, ...]
    responses: tuple[int, ...]
    literal: bool = False
    commitment_t: int | None = None

    def to_bytes(self, params: GroupParams) -> bytes:
        n = len(self.challenges)
        out = bytes([SIG_VERSION, MODE_LITERAL if self.literal else MODE_GENERALIZED])
        out += n.to_bytes(2, "big")
        out += b"".join(encode_scalar(params, c) for c in self.challenges)
        out += b"".join(encode_scalar(params, s) for s in self.responses)
        if self.literal:
            out += encode_element(params, self.commitment_t or 0)
        return out

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> "RingSig":
        if len(data) < 4 or data[0] != SIG_VERSION or data[1] not in (MODE_GENERALIZED, MODE_LITERAL):
            raise RingError("unsupported signature header")
        literal = data[1] == MODE_LITERAL
        n = int.from_bytes(data[2:4], "big")
        sl = params.scalar_len
        expected = 4 + 2 * n * sl + (params.element_len if literal else 0)
        if len(data) != expected:
            raise RingError(f"signature length {len(data)} does not match ring size {n}")
        body = data[4:]
        try:
            cs = tuple(decode_scalar(params, body[i * sl:(i + 1) * sl]) for i in range(n))
            ss = tuple(decode_scalar(params, body[(n + i) * sl:(n + i + 1) * sl]) for i in range(n))
            t = decode_element(params, body[2 * n * sl:]) if literal else None
        except GroupError as exc:
            raise RingError(str(exc)) from exc
        return cls(cs, ss, literal, t)


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: str = "ok"

    def __bool__(self) -> bool:
        return self.ok


PROOF_VERSION = 1


@dataclass(frozen=True)
class VrfProof:
    vrf_output: bytes
    seed: bytes
    sigma: RingSig = field(repr=False)

    def to_bytes(self, params: GroupParams) -> bytes:
        return bytes([PROOF_VERSION]) + self.vrf_output + self.seed + self.sigma.to_bytes(params)

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> "VrfProof":
        if len(data) < 65 or data[0] != PROOF_VERSION:
            raise RingError("unsupported proof encoding")
        return cls(bytes(data[1:33]), bytes(data[33:65]), RingSig.from_bytes(params, bytes(data[65:])))


def challenge_hash(params: GroupParams, vrf_output: bytes, seed: bytes, commitments: Sequence[int]) -> int:
    data = bytes(vrf_output) + bytes(seed) + b"".join(encode_element(params, a) for a in commitments)
    return hash_to_scalar(params, CHALLENGE_TAG, data)


def _commit(params: GroupParams, s: int, y: int, c: int) -> int:
    return group_mul(params, group_exp(params, params.generator_g, s), group_exp(params, y, c))


def nonce_rng(params: GroupParams, sk: int, vrf_output: bytes, seed: bytes, ring: Ring) -> KeccakDrbg:
    """Deterministic signing randomness derived from the key and the message."""
    material = (
        encode_scalar(params, sk)
        + bytes(vrf_output)
        + bytes(seed)
        + b"".join(encode_element(params, pk) for pk in ring.pks)
    )
    return KeccakDrbg(keccak256(b"ringsig-nonce" + material))


def ring_sign(
    params: GroupParams,
    sk_signer: int,
    signer_index: int,
    seed: bytes,
    vrf_output: bytes,
    ring: Ring,
    rng=None,
    literal: bool = False,
) -> RingSig:
    """Sign; with ``rng=None`` the nonces are derived from (sk, message, ring)."""
    n = len(ring)
    o = params.order_o
    g = params.generator_g
    if not 0 <= signer_index < n:
        raise RingError("signer index outside the ring")
    if ring.members[signer_index].pk != group_exp(params, g, sk_signer):
        raise RingError("signer public key is not at the given ring position")
    if literal and signer_index != 0:
        raise RingError("literal mode requires the signer in the first slot")
    if rng is None:
        rng = nonce_rng(params, sk_signer, vrf_output, seed, ring)

    t = random_scalar(params, rng)
    challenges = [0] * n
    responses = [0] * n
    commitments = [0] * n
    commitments[signer_index] = group_exp(params, g, t)
    for i in range(n):
        if i == signer_index:
            continue
        challenges[i] = rng.randrange(o)
        responses[i] = rng.randrange(o)
        commitments[i] = _commit(params, responses[i], ring.pks[i], challenges[i])
    c_total = challenge_hash(params, vrf_output, seed, commitments)
    challenges[signer_index] = (c_total - sum(challenges)) % o
    responses[signer_index] = (t - sk_signer * challenges[signer_index]) % o
    return RingSig(
        tuple(challenges),
        tuple(responses),
        literal=literal,
        commitment_t=commitments[0] if literal else None,
    )


def ring_verify(params: GroupParams, proof: VrfProof, ring: Ring) -> VerifyResult:
    sig = proof.sigma
    n = len(ring)
    if len(sig.challenges) != n or len(sig.responses) != n:
        return VerifyResult(False, "length-mismatch")
    o = params.order_o
    if any(not 0 <= v < o for v in sig.challenges + sig.responses):
        return VerifyResult(False, "scalar-out-of-range")
    if len(proof.vrf_output) != 32 or len(proof.seed) != 32:
        return VerifyResult(False, "malformed-digest")
    commitments = [_commit(params, s, y, c) for s, y, c in zip(sig.responses, ring.pks, sig.challenges)]
    if sig.literal:
        if sig.commitment_t is None or not params.is_element(sig.commitment_t):
            return VerifyResult(False, "missing-commitment")
        # the shipped T must be the one the first slot's response reproduces
        if commitments[0] != sig.commitment_t:
            return VerifyResult(False, "commitment-mismatch")
        hashed = [sig.commitment_t] + commitments[1:]
    else:
        hashed = commitments
    if challenge_hash(params, proof.vrf_output, proof.seed, hashed) != sum(sig.challenges) % o:
        return VerifyResult(False, "challenge-mismatch")
    return VerifyResult(True)
