"""Gen / Eval / Ver over the assembled subsystems."""

from __future__ import annotations

from dataclasses import dataclass

from .delegation import ParticipantKeys, OffchainKeys, delegate_key, did_for, generate_keys, generate_offchain_keys, offchain_sign
from .drbg import KeccakDrbg, system_rng
from .group import GroupParams, get_group
from .keccak import keccak256
from .ringsig import Ring, RingError, RingMember, VrfProof, ring_verify
from .rlwe import RlweKeyPair, RlweParams, get_params, rlwe_keygen
from .worker import rlwe_processing, vrf_output_of


@dataclass(frozen=True)
class SecurityConfig:
    group: str = "modp2048"
    rlwe: str = "R256"
    participants: int = 5


@dataclass(frozen=True)
class VrfKeyMaterial:
    group_name: str
    rlwe_name: str
    participants: tuple[ParticipantKeys, ...]
    rlwe_keys: RlweKeyPair
    offchain: OffchainKeys

    @property
    def group(self) -> GroupParams:
        return get_group(self.group_name)

    @property
    def rlwe(self) -> RlweParams:
        return get_params(self.rlwe_name)

    def ring(self) -> Ring:
        g = self.group
        return Ring(tuple(RingMember(did_for(g, k.delegation.pk), k.delegation.pk) for k in self.participants))


def gen(config: SecurityConfig, rng=None) -> VrfKeyMaterial:
    if config.participants < 1:
        raise ValueError("need at least one participant")
    group = get_group(config.group)
    rparams = get_params(config.rlwe)
    rng = rng or system_rng()
    participants = tuple(generate_keys(group, rng) for _ in range(config.participants))
    secrets = [s for k in participants for s in (k.onchain.sk, k.delegation.sk)]
    if len(set(secrets)) != len(secrets):
        # only reachable in the toy groups
        raise ValueError("secret collision while generating participant keys")
    offchain = generate_offchain_keys(group, rng)
    return VrfKeyMaterial(config.group, config.rlwe, participants, rlwe_keygen(rparams, rng), offchain)


def eval_vrf(seed: bytes, km: VrfKeyMaterial, ring: Ring, delegator: int, round_id: int = 0, literal: bool = False) -> tuple[bytes, VrfProof]:
    """Deterministic in (seed, keys, ring, delegator): the hand-off randomness
    is derived from the seed and the signature nonces from the signing key."""
    if not 0 <= delegator < len(km.participants):
        raise RingError("delegator index outside the participant list")
    group = km.group
    c1, c2 = rlwe_processing(seed, km.rlwe_keys)
    vrf_output = vrf_output_of(c1, c2)
    rng = KeccakDrbg(keccak256(b"pqvrf-eval" + bytes(seed) + delegator.to_bytes(2, "big")))
    pkg = delegate_key(group, km.participants[delegator], delegator, km.offchain.pk_off, round_id, rng)
    proof = offchain_sign(group, km.offchain.sk_off, pkg, seed, vrf_output, ring, round_id, literal)
    return vrf_output, proof


def verify(params: GroupParams, pi: VrfProof, ring: Ring) -> bool:
    try:
        return bool(ring_verify(params, pi, ring))
    except (TypeError, ValueError, AttributeError):
        return False
