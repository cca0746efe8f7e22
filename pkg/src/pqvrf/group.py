"""Prime-order subgroups of Z_p^* and the encodings used for hashing.

Three named groups are available:

``modp2048``
    The 2048-bit MODP safe prime from RFC 3526 (group 14) with its
    subgroup of quadratic residues, order (p - 1) / 2.
``toy64``
    The largest 64-bit safe prime; same structure, fast enough for tests.
``toy23``
    p = 23, o = 11, g = 2. Only useful for hand-checkable fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2

from .keccak import keccak256

MODP2048_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16,
)
TOY64_P = 0xFFFFFFFFFFFFFA43

SCALAR_MIN_BYTES = 32


class GroupError(ValueError):
    pass


@dataclass(frozen=True)
class GroupParams:
    name: str
    modulus_p: int
    order_o: int
    generator_g: int
    generator_h: int = field(default=0)

    @property
    def element_len(self) -> int:
        return (self.modulus_p.bit_length() + 7) // 8

    @property
    def scalar_len(self) -> int:
        return max(SCALAR_MIN_BYTES, (self.order_o.bit_length() + 7) // 8)

    @property
    def identity(self) -> int:
        return 1

    def is_element(self, value: int) -> bool:
        if not 0 < value < self.modulus_p:
            return False
        if 2 * self.order_o + 1 == self.modulus_p:
            # safe prime: the order-o subgroup is exactly the quadratic residues
            return gmpy2.jacobi(value, self.modulus_p) == 1
        return gmpy2.powmod(value, self.order_o, self.modulus_p) == 1


def hash_to_group(p: int, o: int, anchor: bytes) -> int:
    """Map bytes to a non-identity element of the order-o subgroup.

    Expands ``anchor`` with counter-mode keccak to len(p) + 16 bytes, reduces
    mod p and clears the cofactor (p - 1) / o. Retries on identity.
    """
    cofactor = (p - 1) // o
    width = (p.bit_length() + 7) // 8 + 16
    attempt = 0
    while True:
        stream = b""
        block = 0
        while len(stream) < width:
            stream += keccak256(anchor + attempt.to_bytes(4, "big") + block.to_bytes(4, "big"))
            block += 1
        candidate = pow(int.from_bytes(stream[:width], "big") % p, cofactor, p)
        if candidate not in (0, 1):
            return candidate
        attempt += 1


def _make(name: str, p: int, o: int, g: int) -> GroupParams:
    g_bytes = g.to_bytes((p.bit_length() + 7) // 8, "big")
    anchor = g_bytes + b"dleq-h"
    h = hash_to_group(p, o, anchor)
    while h == g:  # only plausible in tiny groups
        anchor += b"'"
        h = hash_to_group(p, o, anchor)
    return GroupParams(name=name, modulus_p=p, order_o=o, generator_g=g, generator_h=h)


@lru_cache(maxsize=None)
def get_group(name: str) -> GroupParams:
    if name == "modp2048":
        return _make(name, MODP2048_P, (MODP2048_P - 1) // 2, 2)
    if name == "toy64":
        return _make(name, TOY64_P, (TOY64_P - 1) // 2, 4)
    if name == "toy23":
        return _make(name, 23, 11, 2)
    raise GroupError(f"unknown group {name!r}")


GROUP_NAMES = ("modp2048", "toy64", "toy23")


def group_exp(params: GroupParams, base: int, e: int) -> int:
    return int(gmpy2.powmod(base, e % params.order_o, params.modulus_p))


def group_mul(params: GroupParams, a: int, b: int) -> int:
    return a * b % params.modulus_p


def group_inv(params: GroupParams, a: int) -> int:
    return int(gmpy2.invert(a, params.modulus_p))


def encode_scalar(params: GroupParams, x: int) -> bytes:
    return (x % params.order_o).to_bytes(params.scalar_len, "big")


def decode_scalar(params: GroupParams, data: bytes) -> int:
    if len(data) != params.scalar_len:
        raise GroupError(f"scalar encoding must be {params.scalar_len} bytes, got {len(data)}")
    value = int.from_bytes(data, "big")
    if value >= params.order_o:
        raise GroupError("scalar out of range")
    return value


def encode_element(params: GroupParams, y: int) -> bytes:
    return y.to_bytes(params.element_len, "big")


def decode_element(params: GroupParams, data: bytes) -> int:
    if len(data) != params.element_len:
        raise GroupError(f"element encoding must be {params.element_len} bytes, got {len(data)}")
    value = int.from_bytes(data, "big")
    if not params.is_element(value):
        raise GroupError("value is not in the prime-order subgroup")
    return value


def hash_to_scalar(params: GroupParams, domain_tag: bytes, data: bytes) -> int:
    return int.from_bytes(keccak256(domain_tag + data), "big") % params.order_o


def random_scalar(params: GroupParams, rng) -> int:
    """Uniform non-zero scalar from a ``random.Random``-compatible source."""
    return rng.randrange(1, params.order_o)
