from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache


class RlweParamError(ValueError):
    pass


def _prime_factors(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def _is_prime(n: int) -> bool:
    return n > 1 and _prime_factors(n) == [n]


def smallest_primitive_root(q: int) -> int:
    factors = _prime_factors(q - 1)
    for g in range(2, q):
        if all(pow(g, (q - 1) // f, q) != 1 for f in factors):
            return g
    raise RlweParamError(f"no primitive root mod {q}")


@dataclass(frozen=True)
class RlweParams:
    name: str
    n: int
    q: int
    sigma: float
    tail_bound: int
    precision_bits: int

    def __post_init__(self) -> None:
        if self.n < 2 or self.n & (self.n - 1):
            raise RlweParamError("ring dimension must be a power of two")
        if not _is_prime(self.q) or (self.q - 1) % (2 * self.n):
            raise RlweParamError("q must be a prime with q = 1 mod 2N")
        if self.tail_bound < 12 * self.sigma:
            raise RlweParamError("tail bound must be at least 12 sigma")
        if self.q >= 1 << 16:
            raise RlweParamError("coefficients must fit the 2-byte wire format")

    @property
    def psi(self) -> int:
        """Primitive 2N-th root of unity: smallest primitive root to the (q-1)/2N."""
        return _psi(self.q, self.n)

    @property
    def log_n(self) -> int:
        return self.n.bit_length() - 1

    @property
    def half_q(self) -> int:
        return self.q // 2


@lru_cache(maxsize=None)
def _psi(q: int, n: int) -> int:
    return pow(smallest_primitive_root(q), (q - 1) // (2 * n), q)


# tail_bound = ceil(12 * sigma)
PARAMETER_SETS = {
    "R256": RlweParams("R256", n=256, q=7681, sigma=4.516, tail_bound=math.ceil(12 * 4.516), precision_bits=32),
    "R512": RlweParams("R512", n=512, q=12289, sigma=4.516, tail_bound=math.ceil(12 * 4.516), precision_bits=32),
}


def get_params(name: str) -> RlweParams:
    try:
        return PARAMETER_SETS[name]
    except KeyError:
        raise RlweParamError(f"unknown RLWE parameter set {name!r}") from None
