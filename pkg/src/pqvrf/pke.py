"""Hashed ElGamal over the configured group, used to hand a scalar to the worker."""

from __future__ import annotations

from dataclasses import dataclass

from .group import (
    GroupError,
    GroupParams,
    decode_element,
    encode_element,
    encode_scalar,
    group_exp,
    random_scalar,
)
from .keccak import keccak256


class PkeDecodeError(ValueError):
    pass


@dataclass(frozen=True)
class PkeCiphertext:
    ephemeral: int
    masked: bytes

    def to_bytes(self, params: GroupParams) -> bytes:
        return encode_element(params, self.ephemeral) + self.masked

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> "PkeCiphertext":
        if len(data) != params.element_len + params.scalar_len:
            raise PkeDecodeError(
                f"ciphertext must be {params.element_len + params.scalar_len} bytes, got {len(data)}"
            )
        try:
            ephemeral = decode_element(params, data[: params.element_len])
        except GroupError as exc:
            raise PkeDecodeError(str(exc)) from exc
        return cls(ephemeral, bytes(data[params.element_len:]))


def _mask(params: GroupParams, shared: int) -> bytes:
    # block 0 is keccak256("pke" || shared); wider scalars append counter blocks
    seed = b"pke" + encode_element(params, shared)
    out = keccak256(seed)
    counter = 1
    while len(out) < params.scalar_len:
        out += keccak256(seed + counter.to_bytes(4, "big"))
        counter += 1
    return out[: params.scalar_len]


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def pke_encrypt(params: GroupParams, pk_receiver: int, m: int, rng) -> PkeCiphertext:
    r = random_scalar(params, rng)
    ephemeral = group_exp(params, params.generator_g, r)
    shared = group_exp(params, pk_receiver, r)
    return PkeCiphertext(ephemeral, _xor(encode_scalar(params, m), _mask(params, shared)))


def pke_decrypt(params: GroupParams, sk_receiver: int, ct: PkeCiphertext | bytes) -> int:
    """Recover the scalar. A wrong key yields an unrelated scalar, not an error."""
    if isinstance(ct, (bytes, bytearray)):
        ct = PkeCiphertext.from_bytes(params, bytes(ct))
    if len(ct.masked) != params.scalar_len:
        raise PkeDecodeError("masked scalar has the wrong length")
    shared = group_exp(params, ct.ephemeral, sk_receiver)
    plain = _xor(ct.masked, _mask(params, shared))
    return int.from_bytes(plain, "big") % params.order_o
