"""Chaum-Pedersen discrete-log equality proofs, interactive and Fiat-Shamir."""

from __future__ import annotations

from dataclasses import dataclass

from .group import (
    GroupError,
    GroupParams,
    decode_element,
    decode_scalar,
    encode_element,
    encode_scalar,
    group_exp,
    group_inv,
    group_mul,
    hash_to_scalar,
    random_scalar,
)

CHALLENGE_TAG = b"dleq-v1"


class DleqError(ValueError):
    pass


@dataclass(frozen=True)
class DleqStatement:
    g1: int
    g2: int
    h1: int
    h2: int

    def to_bytes(self, params: GroupParams) -> bytes:
        return b"".join(encode_element(params, v) for v in (self.g1, self.g2, self.h1, self.h2))


@dataclass(frozen=True)
class DleqProof:
    t1: int
    t2: int
    s: int
    context: bytes = b""

    def to_bytes(self, params: GroupParams) -> bytes:
        return (
            encode_element(params, self.t1)
            + encode_element(params, self.t2)
            + encode_scalar(params, self.s)
            + len(self.context).to_bytes(4, "big")
            + self.context
        )

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> "DleqProof":
        el, sl = params.element_len, params.scalar_len
        head = 2 * el + sl + 4
        if len(data) < head:
            raise DleqError("truncated proof")
        ctx_len = int.from_bytes(data[head - 4:head], "big")
        if len(data) != head + ctx_len:
            raise DleqError("context length does not match")
        try:
            return cls(
                decode_element(params, data[:el]),
                decode_element(params, data[el:2 * el]),
                decode_scalar(params, data[2 * el:2 * el + sl]),
                bytes(data[head:]),
            )
        except GroupError as exc:
            raise DleqError(str(exc)) from exc


def commit(params: GroupParams, stmt: DleqStatement, r: int) -> tuple[int, int]:
    return group_exp(params, stmt.g1, r), group_exp(params, stmt.g2, r)


def respond(params: GroupParams, x: int, r: int, c: int) -> int:
    return (r + c * x) % params.order_o


def relations_hold(params: GroupParams, stmt: DleqStatement, t1: int, t2: int, c: int, s: int) -> bool:
    """Check t1 = g1^s * h1^-c and t2 = g2^s * h2^-c."""
    lhs1 = group_mul(params, group_exp(params, stmt.g1, s), group_inv(params, group_exp(params, stmt.h1, c)))
    lhs2 = group_mul(params, group_exp(params, stmt.g2, s), group_inv(params, group_exp(params, stmt.h2, c)))
    return lhs1 == t1 and lhs2 == t2


def fiat_shamir_challenge(params: GroupParams, t1: int, t2: int, stmt: DleqStatement, context: bytes) -> int:
    data = encode_element(params, t1) + encode_element(params, t2) + stmt.to_bytes(params) + bytes(context)
    return hash_to_scalar(params, CHALLENGE_TAG, data)


def dleq_prove(params: GroupParams, x: int, stmt: DleqStatement, context: bytes, rng) -> DleqProof:
    if group_exp(params, stmt.g1, x) != stmt.h1 or group_exp(params, stmt.g2, x) != stmt.h2:
        raise DleqError("witness does not satisfy the statement")
    r = random_scalar(params, rng)
    t1, t2 = commit(params, stmt, r)
    c = fiat_shamir_challenge(params, t1, t2, stmt, context)
    return DleqProof(t1, t2, respond(params, x, r, c), bytes(context))


def dleq_verify(params: GroupParams, stmt: DleqStatement, proof: DleqProof) -> bool:
    try:
        values = (proof.t1, proof.t2, stmt.g1, stmt.g2, stmt.h1, stmt.h2)
        if not all(isinstance(v, int) and params.is_element(v) for v in values):
            return False
        if not 0 <= proof.s < params.order_o:
            return False
        c = fiat_shamir_challenge(params, proof.t1, proof.t2, stmt, proof.context)
        return relations_hold(params, stmt, proof.t1, proof.t2, c, proof.s)
    except (TypeError, ValueError):
        return False
