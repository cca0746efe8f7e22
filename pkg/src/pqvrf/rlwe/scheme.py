"""Ring-LWE public-key encryption (LPR style, NTT-domain keys)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ntt import NttPoly, RingPoly, fwd_ntt, inv_ntt
from .params import RlweParams
from .sampler import ByteSource, KnuthYaoSampler, sample_poly


class RlweError(RuntimeError):
    pass


@dataclass(frozen=True, eq=True)
class RlweCiphertext:
    c1: NttPoly
    c2: NttPoly


@dataclass(frozen=True, eq=True)
class RlweKeyPair:
    a: NttPoly
    p: NttPoly
    r2: NttPoly

    @property
    def params(self) -> RlweParams:
        return self.a.params


def sampler_for(params: RlweParams) -> KnuthYaoSampler:
    return _SAMPLERS.setdefault(params, KnuthYaoSampler.from_params(params))


_SAMPLERS: dict[RlweParams, KnuthYaoSampler] = {}


def keypair_from_polys(params: RlweParams, a: NttPoly, r1: RingPoly, r2: RingPoly) -> RlweKeyPair:
    r2_hat = fwd_ntt(r2)
    return RlweKeyPair(a=a, p=fwd_ntt(r1) - a * r2_hat, r2=r2_hat)


def rlwe_keygen(params: RlweParams, rng) -> RlweKeyPair:
    """a uniform (NTT domain), r1 and r2 Gaussian, p = r1 - a*r2."""
    a = NttPoly(params, [rng.randrange(params.q) for _ in range(params.n)])
    source = ByteSource.from_rng(rng)
    sampler = sampler_for(params)
    r1 = RingPoly(params, sample_poly(sampler, source, params.n))
    r2 = RingPoly(params, sample_poly(sampler, source, params.n))
    return keypair_from_polys(params, a, r1, r2)


def encode_message(params: RlweParams, bits: Sequence[int]) -> RingPoly:
    arr = np.asarray(bits, dtype=np.int64)
    if arr.shape != (params.n,):
        raise ValueError(f"message must have exactly {params.n} bits")
    if ((arr != 0) & (arr != 1)).any():
        raise ValueError("message entries must be bits")
    return RingPoly(params, arr * params.half_q)


def rlwe_enc2(a: NttPoly, p: NttPoly, m_bits: Sequence[int], error_source: ByteSource) -> RlweCiphertext:
    """Encrypt with errors e1, e2, e3 drawn in that order from ``error_source``.

    The result is a pure function of the keys, the message and the bytes the
    source yields. Ciphertext halves come back in natural coefficient order.
    """
    params = a.params
    sampler = sampler_for(params)
    try:
        e1 = RingPoly(params, sample_poly(sampler, error_source, params.n))
        e2 = RingPoly(params, sample_poly(sampler, error_source, params.n))
        e3 = RingPoly(params, sample_poly(sampler, error_source, params.n))
    except Exception as exc:
        raise RlweError(f"RLWE Encryption failed with error: {exc}") from exc
    e3 = e3 + encode_message(params, m_bits)
    e1_hat, e2_hat, e3_hat = fwd_ntt(e1), fwd_ntt(e2), fwd_ntt(e3)
    return RlweCiphertext(c1=e2_hat + a * e1_hat, c2=e3_hat + p * e1_hat)


def decode_bits(params: RlweParams, noisy: np.ndarray) -> list[int]:
    q = params.q
    x = np.asarray(noisy, dtype=np.int64) % q
    # 4x in (q, 3q) <=> x in (q/4, 3q/4) without fractional thresholds
    return ((4 * x > q) & (4 * x < 3 * q)).astype(int).tolist()


def rlwe_decrypt(r2: NttPoly, ct: RlweCiphertext) -> list[int]:
    # with p = r1 - a*r2: c2 + c1*r2 = m + e3 + r1*e1 + e2*r2
    m_noisy = inv_ntt(ct.c2 + ct.c1 * r2)
    return decode_bits(r2.params, m_noisy.coeffs)


def _poly_bytes(poly: NttPoly) -> bytes:
    if int(poly.coeffs.max(initial=0)) >= 1 << 16:
        raise RlweError("coefficient does not fit in 16 bits")
    return poly.coeffs.astype("<u2").tobytes()


def serialize_ciphertext(ct: RlweCiphertext) -> bytes:
    """c1 then c2, each coefficient 2-byte little-endian in natural order (4N bytes)."""
    return _poly_bytes(ct.c1) + _poly_bytes(ct.c2)


def serialize_halves(ct: RlweCiphertext) -> tuple[bytes, bytes]:
    return _poly_bytes(ct.c1), _poly_bytes(ct.c2)


def deserialize_ciphertext(params: RlweParams, data: bytes) -> RlweCiphertext:
    if len(data) != 4 * params.n:
        raise ValueError(f"ciphertext must be {4 * params.n} bytes, got {len(data)}")
    coeffs = np.frombuffer(data, dtype="<u2").astype(np.int64)
    if (coeffs >= params.q).any():
        raise ValueError("coefficient not reduced mod q")
    return RlweCiphertext(NttPoly(params, coeffs[: params.n]), NttPoly(params, coeffs[params.n:]))


def serialize_poly(poly: RingPoly | NttPoly) -> bytes:
    return _poly_bytes(poly)  # type: ignore[arg-type]


def deserialize_ntt_poly(params: RlweParams, data: bytes) -> NttPoly:
    if len(data) != 2 * params.n:
        raise ValueError(f"polynomial must be {2 * params.n} bytes")
    return NttPoly(params, np.frombuffer(data, dtype="<u2").astype(np.int64))
