"""Post-quantum VRF: MPC seeds, Ring-LWE outputs, delegated ring-signature proofs."""

from .keccak import keccak256
from .group import GroupParams, get_group
from .ringsig import Ring, RingSig, VrfProof, ring_sign, ring_verify
from .vrf import SecurityConfig, VrfKeyMaterial, eval_vrf, gen, verify

__version__ = "0.1.0"

__all__ = [
    "GroupParams",
    "Ring",
    "RingSig",
    "SecurityConfig",
    "VrfKeyMaterial",
    "VrfProof",
    "eval_vrf",
    "gen",
    "get_group",
    "keccak256",
    "ring_sign",
    "ring_verify",
    "verify",
]
