"""Asymptotic cost contributions of one VRF evaluation, plus optional timings."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

COMPONENTS = ("hashing", "participants", "polynomial", "multi_exponentiation", "single_exponentiation")


@dataclass(frozen=True)
class ComplexityReport:
    k: int
    n: int
    m: int
    log_p: int
    raw: dict[str, float]
    log2: dict[str, float]
    seconds: dict[str, float] | None = None

    def rows(self) -> list[tuple[str, float, float]]:
        return [(c, self.raw[c], self.log2[c]) for c in COMPONENTS]

    def to_table(self) -> str:
        lines = [f"# k={self.k} n={self.n} M={self.m} log_p={self.log_p}", "component,raw,log2"]
        for name, raw, lg in self.rows():
            lines.append(f"{name},{raw:g},{lg:.1f}")
        if self.seconds:
            lines.append("")
            lines.append("measured,seconds")
            lines += [f"{k},{v:.6f}" for k, v in self.seconds.items()]
        return "\n".join(lines) + "\n"


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else float("-inf")


def complexity_report(k: int, n: int, m: int, log_p: int) -> ComplexityReport:
    """Hashing k, participants n, polynomial M log2 M, multi-exp n log p, single exp log p."""
    if min(k, n, m, log_p) < 1:
        raise ValueError("all inputs must be positive")
    poly = m * math.log2(m)
    raw = {
        "hashing": float(k),
        "participants": float(n),
        "polynomial": float(round(poly)) if poly.is_integer() else poly,
        "multi_exponentiation": float(n * log_p),
        "single_exponentiation": float(log_p),
    }
    return ComplexityReport(k, n, m, log_p, raw, {c: _log2(v) for c, v in raw.items()})


def measure(group_name: str = "modp2048", rlwe_name: str = "R256", repeats: int = 20) -> dict[str, float]:
    """Wall-clock seconds per call for the primitives behind each component."""
    from .drbg import KeccakDrbg
    from .group import get_group, group_exp
    from .keccak import keccak256
    from .rlwe import RingPoly, get_params

    rng = KeccakDrbg(b"bench")
    g = get_group(group_name)
    rp = get_params(rlwe_name)
    a = RingPoly(rp, [rng.randrange(rp.q) for _ in range(rp.n)])
    b = RingPoly(rp, [rng.randrange(rp.q) for _ in range(rp.n)])
    e = rng.randrange(g.order_o)
    jobs = {
        "keccak256_32B": lambda: keccak256(b"\x00" * 32),
        "group_exp": lambda: group_exp(g, g.generator_g, e),
        "ntt_poly_mul": lambda: a * b,
    }
    out = {}
    for name, fn in jobs.items():
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        out[name] = (time.perf_counter() - t0) / repeats
    return out
