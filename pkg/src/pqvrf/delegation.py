"""Delegated signing keys for the off-chain worker.

Every participant holds an on-chain pair and an independent delegation pair.
A delegator hands the delegation secret to the worker encrypted under the
worker's public key and attaches a DLEQ proof that the secret behind the
committed ``pk'`` also produced the companion value ``k = h^sk'``. The proof
context is the round id, so a package cannot be replayed across rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dleq import DleqProof, DleqStatement, dleq_prove, dleq_verify
from .group import GroupParams, decode_element, encode_element, group_exp, random_scalar
from .keccak import keccak256
from .pke import PkeCiphertext, PkeDecodeError, pke_decrypt, pke_encrypt
from .ringsig import Ring, VrfProof, ring_sign


class DelegationError(ValueError):
    pass


@dataclass(frozen=True)
class DidKeyPair:
    did: str
    sk: int
    pk: int


@dataclass(frozen=True)
class ParticipantKeys:
    onchain: DidKeyPair
    delegation: DidKeyPair


@dataclass(frozen=True)
class OffchainKeys:
    sk_off: int
    pk_off: int


@dataclass(frozen=True)
class DelegationPackage:
    delegator_index: int
    encrypted_key: PkeCiphertext
    companion: int  # h^sk'
    binding_proof: DleqProof

    def to_bytes(self, params: GroupParams) -> bytes:
        return (
            self.delegator_index.to_bytes(2, "big")
            + self.encrypted_key.to_bytes(params)
            + encode_element(params, self.companion)
            + self.binding_proof.to_bytes(params)
        )

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> "DelegationPackage":
        el, sl = params.element_len, params.scalar_len
        ct_end = 2 + el + sl
        if len(data) < ct_end + el:
            raise DelegationError("truncated delegation package")
        try:
            ct = PkeCiphertext.from_bytes(params, data[2:ct_end])
            companion = decode_element(params, data[ct_end:ct_end + el])
            proof = DleqProof.from_bytes(params, data[ct_end + el:])
        except ValueError as exc:
            raise DelegationError(str(exc)) from exc
        return cls(int.from_bytes(data[:2], "big"), ct, companion, proof)


def did_for(params: GroupParams, pk: int) -> str:
    return "did:pqvrf:" + keccak256(encode_element(params, pk))[-20:].hex()


def keygen(params: GroupParams, rng) -> DidKeyPair:
    sk = random_scalar(params, rng)
    pk = group_exp(params, params.generator_g, sk)
    return DidKeyPair(did_for(params, pk), sk, pk)


def generate_keys(params: GroupParams, rng) -> ParticipantKeys:
    onchain = keygen(params, rng)
    delegation = keygen(params, rng)
    while delegation.sk == onchain.sk:
        delegation = keygen(params, rng)
    return ParticipantKeys(onchain, delegation)


def generate_offchain_keys(params: GroupParams, rng) -> OffchainKeys:
    sk = random_scalar(params, rng)
    return OffchainKeys(sk, group_exp(params, params.generator_g, sk))


def round_context(round_id: int) -> bytes:
    return b"pqvrf-round" + round_id.to_bytes(8, "big")


def binding_statement(params: GroupParams, pk_delegation: int, companion: int) -> DleqStatement:
    return DleqStatement(params.generator_g, params.generator_h, pk_delegation, companion)


def delegate_key(
    params: GroupParams,
    keys: ParticipantKeys,
    delegator_index: int,
    pk_off: int,
    round_id: int,
    rng,
) -> DelegationPackage:
    sk = keys.delegation.sk
    companion = group_exp(params, params.generator_h, sk)
    stmt = binding_statement(params, keys.delegation.pk, companion)
    proof = dleq_prove(params, sk, stmt, round_context(round_id), rng)
    return DelegationPackage(delegator_index, pke_encrypt(params, pk_off, sk, rng), companion, proof)


def verify_binding(params: GroupParams, pkg: DelegationPackage, committed_pk: int, round_id: int | None = None) -> bool:
    if round_id is not None and pkg.binding_proof.context != round_context(round_id):
        return False
    return dleq_verify(params, binding_statement(params, committed_pk, pkg.companion), pkg.binding_proof)


def recover_delegated_key(params: GroupParams, sk_off: int, pkg: DelegationPackage, ring: Ring, round_id: int | None = None) -> int:
    """Check the package against the ring and return the delegated secret."""
    if not 0 <= pkg.delegator_index < len(ring):
        raise DelegationError("delegator index outside the ring")
    committed = ring.members[pkg.delegator_index].pk
    if not verify_binding(params, pkg, committed, round_id):
        raise DelegationError("binding proof does not verify against the committed key")
    try:
        sk = pke_decrypt(params, sk_off, pkg.encrypted_key)
    except PkeDecodeError as exc:
        raise DelegationError(f"cannot decrypt delegated key: {exc}") from exc
    if group_exp(params, params.generator_g, sk) != committed:
        raise DelegationError("decrypted key does not match the committed public key")
    return sk


def offchain_sign(
    params: GroupParams,
    sk_off: int,
    pkg: DelegationPackage,
    seed: bytes,
    vrf_output: bytes,
    ring: Ring,
    round_id: int | None = None,
    literal: bool = False,
) -> VrfProof:
    sk = recover_delegated_key(params, sk_off, pkg, ring, round_id)
    sigma = ring_sign(params, sk, pkg.delegator_index, seed, vrf_output, ring, literal=literal)
    return VrfProof(bytes(vrf_output), bytes(seed), sigma)
