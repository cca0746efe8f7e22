"""Negacyclic NTT over Z_q[x]/(x^N + 1).

``fwd`` maps coefficient vectors to evaluations at the odd powers of psi,
``A[k] = sum_i a[i] psi^i omega^(ik)`` with ``omega = psi^2``, in natural
index order. Internally the transform runs Gentleman-Sande butterflies whose
output is bit-reversed; :func:`rearrange` puts it back in natural order.

All array functions accept a trailing axis of length N and any number of
leading batch axes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .params import RlweParams


class DomainError(TypeError):
    """Raised when coefficient- and NTT-domain values are mixed."""


@lru_cache(maxsize=None)
def bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


def rearrange(x: np.ndarray) -> np.ndarray:
    """Bit-reversal permutation on the last axis (an involution)."""
    return x[..., bit_reverse_indices(x.shape[-1])]


@lru_cache(maxsize=None)
def _tables(q: int, n: int, psi: int):
    omega = psi * psi % q
    psi_inv = pow(psi, -1, q)
    omega_inv = pow(omega, -1, q)
    twist = np.array([pow(psi, i, q) for i in range(n)], dtype=np.int64)
    untwist = np.array([pow(psi_inv, i, q) for i in range(n)], dtype=np.int64)
    w_pows = np.array([pow(omega, i, q) for i in range(n // 2)], dtype=np.int64)
    w_inv_pows = np.array([pow(omega_inv, i, q) for i in range(n // 2)], dtype=np.int64)
    n_inv = pow(n, -1, q)
    for arr in (twist, untwist, w_pows, w_inv_pows):
        arr.setflags(write=False)
    return twist, untwist, w_pows, w_inv_pows, n_inv


def _dif(x: np.ndarray, w_pows: np.ndarray, q: int) -> np.ndarray:
    # natural-order input, bit-reversed output
    n = x.shape[-1]
    lead = x.shape[:-1]
    half = n // 2
    while half >= 1:
        groups = n // (2 * half)
        y = x.reshape(*lead, groups, 2, half)
        u, v = y[..., 0, :], y[..., 1, :]
        tw = w_pows[:: n // (2 * half)][:half]
        top = (u + v) % q
        bot = (u - v) * tw % q
        x = np.stack((top, bot), axis=-2).reshape(*lead, n)
        half //= 2
    return x


def _dit(x: np.ndarray, w_pows: np.ndarray, q: int) -> np.ndarray:
    # bit-reversed input, natural-order output
    n = x.shape[-1]
    lead = x.shape[:-1]
    half = 1
    while half < n:
        groups = n // (2 * half)
        y = x.reshape(*lead, groups, 2, half)
        u = y[..., 0, :]
        v = y[..., 1, :] * w_pows[:: n // (2 * half)][:half] % q
        x = np.stack(((u + v) % q, (u - v) % q), axis=-2).reshape(*lead, n)
        half *= 2
    return x


def ntt_forward(coeffs: np.ndarray, params: RlweParams) -> np.ndarray:
    q, n = params.q, params.n
    twist, _, w_pows, _, _ = _tables(q, n, params.psi)
    x = np.asarray(coeffs, dtype=np.int64) % q * twist % q
    return rearrange(_dif(x, w_pows, q))


def ntt_inverse(values: np.ndarray, params: RlweParams) -> np.ndarray:
    q, n = params.q, params.n
    _, untwist, _, w_inv_pows, n_inv = _tables(q, n, params.psi)
    x = _dit(rearrange(np.asarray(values, dtype=np.int64) % q), w_inv_pows, q)
    return x * n_inv % q * untwist % q


def negacyclic_schoolbook(a, b, q: int) -> np.ndarray:
    """O(N^2) product mod (x^N + 1, q); the independent reference for NTT products."""
    a = np.asarray(a, dtype=np.int64) % q
    b = np.asarray(b, dtype=np.int64) % q
    n = a.shape[-1]
    full = np.convolve(a, b)
    out = full[:n].copy()
    out[: n - 1] -= full[n:]
    return out % q


class _Poly:
    __slots__ = ("params", "coeffs")

    def __init__(self, params: RlweParams, coeffs) -> None:
        arr = np.array(coeffs, dtype=np.int64) % params.q
        if arr.shape != (params.n,):
            raise ValueError(f"expected {params.n} coefficients, got shape {arr.shape}")
        arr.setflags(write=False)
        self.params = params
        self.coeffs = arr

    def _check(self, other) -> None:
        if type(other) is not type(self):
            raise DomainError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.params != self.params:
            raise ValueError("parameter sets differ")

    def __add__(self, other):
        self._check(other)
        return type(self)(self.params, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return type(self)(self.params, self.coeffs - other.coeffs)

    def __neg__(self):
        return type(self)(self.params, -self.coeffs)

    def __eq__(self, other) -> bool:
        return (
            type(other) is type(self)
            and other.params == self.params
            and bool(np.array_equal(self.coeffs, other.coeffs))
        )

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.params.name, self.coeffs.tobytes()))

    def __repr__(self) -> str:
        head = ", ".join(str(int(c)) for c in self.coeffs[:4])
        return f"{type(self).__name__}({self.params.name}, [{head}, ...])"

    @classmethod
    def zero(cls, params: RlweParams):
        return cls(params, np.zeros(params.n, dtype=np.int64))


class RingPoly(_Poly):
    """Coefficient-domain element of Z_q[x]/(x^N + 1)."""

    __slots__ = ()

    def __mul__(self, other: "RingPoly") -> "RingPoly":
        self._check(other)
        return inv_ntt(fwd_ntt(self) * fwd_ntt(other))


class NttPoly(_Poly):
    """NTT-domain element; multiplication is pointwise."""

    __slots__ = ()

    def __mul__(self, other: "NttPoly") -> "NttPoly":
        self._check(other)
        return NttPoly(self.params, self.coeffs * other.coeffs)


def fwd_ntt(x: RingPoly) -> NttPoly:
    if not isinstance(x, RingPoly):
        raise DomainError("fwd_ntt expects a coefficient-domain polynomial")
    return NttPoly(x.params, ntt_forward(x.coeffs, x.params))


def inv_ntt(x: NttPoly) -> RingPoly:
    if not isinstance(x, NttPoly):
        raise DomainError("inv_ntt expects an NTT-domain polynomial")
    return RingPoly(x.params, ntt_inverse(x.coeffs, x.params))
