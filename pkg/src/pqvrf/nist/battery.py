"""The eleven SP800-22 tests used for the output report.

Every test takes a :class:`BitSequence` (or anything :func:`as_sequence`
accepts) and returns a :class:`TestResult`. Statistics follow the standard's
definitions; where its reference code and text disagree the reference code
wins, because that is what published p-values were computed with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .sequence import BitSequence, as_sequence
from .special import erfc, igamc, normal_cdf

DEFAULT_ALPHA = 0.01


class InsufficientData(ValueError):
    """Sequence too short for the requested test geometry."""


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    name: str
    p_values: tuple[float, ...]
    alpha: float = DEFAULT_ALPHA
    stats: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.p_values:
            raise ValueError("a test result needs at least one p-value")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p-value {p} outside [0, 1]")

    @property
    def p_value(self) -> float:
        return self.p_values[0]

    @property
    def passed(self) -> bool:
        return min(self.p_values) >= self.alpha

    @property
    def mean_p(self) -> float:
        return sum(self.p_values) / len(self.p_values)


def _clip(p: float) -> float:
    return min(1.0, max(0.0, p))


def _windows(bits: np.ndarray, m: int, circular: bool) -> np.ndarray:
    """Integer value of every m-bit window (MSB first)."""
    n = bits.size
    src = np.concatenate((bits, bits[: m - 1])) if circular and m > 1 else bits
    count = n if circular else n - m + 1
    vals = np.zeros(max(count, 0), dtype=np.int64)
    for j in range(m):
        vals = (vals << 1) | src[j:j + count]
    return vals


# --- frequency family ----------------------------------------------------------


def frequency_monobit(seq, alpha: float = DEFAULT_ALPHA, min_bits: int = 1) -> TestResult:
    bits = as_sequence(seq).bits
    n = bits.size
    if n == 0:
        raise InsufficientData("empty sequence")
    if n < min_bits:
        raise InsufficientData(f"monobit needs {min_bits} bits")
    s = abs(2 * int(bits.sum()) - n)
    s_obs = s / math.sqrt(n)
    return TestResult("Frequency (Monobit) Test", (_clip(erfc(s_obs / math.sqrt(2))),), alpha, {"s_obs": s_obs})


def block_frequency(seq, m: int = 128, alpha: float = DEFAULT_ALPHA) -> TestResult:
    bits = as_sequence(seq).bits
    n = bits.size
    if m < 2:
        raise ValueError("block length must be at least 2")
    if m > n:
        raise InsufficientData("block length exceeds sequence length")
    blocks = n // m
    pi = bits[: blocks * m].reshape(blocks, m).mean(axis=1)
    chi2 = 4.0 * m * float(((pi - 0.5) ** 2).sum())
    return TestResult("Frequency Test within a Block", (igamc(blocks / 2, chi2 / 2),), alpha, {"chi2": chi2})


def runs(seq, alpha: float = DEFAULT_ALPHA) -> TestResult:
    bits = as_sequence(seq).bits
    n = bits.size
    if n == 0:
        raise InsufficientData("empty sequence")
    pi = float(bits.mean())
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        return TestResult("Runs Test", (0.0,), alpha, {"pretest": False})
    v = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    num = abs(v - 2 * n * pi * (1 - pi))
    den = 2 * math.sqrt(2 * n) * pi * (1 - pi)
    return TestResult("Runs Test", (_clip(erfc(num / den)),), alpha, {"V": v, "pretest": True})


# --- longest run ---------------------------------------------------------------

_LONGEST_RUN_TABLES = (
    # (min n, block length M, class lower edge v0, probabilities)
    (750_000, 10_000, 10, (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6_272, 128, 4, (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, 1, (0.2148, 0.3672, 0.2305, 0.1875)),
)


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    """Longest run of ones in each row."""
    best = np.zeros(blocks.shape[0], dtype=np.int64)
    cur = np.zeros(blocks.shape[0], dtype=np.int64)
    for col in blocks.T:
        cur = (cur + 1) * col
        np.maximum(best, cur, out=best)
    return best


def longest_run_of_ones(seq, alpha: float = DEFAULT_ALPHA) -> TestResult:
    bits = as_sequence(seq).bits
    n = bits.size
    for min_n, m, v0, probs in _LONGEST_RUN_TABLES:
        if n >= min_n:
            break
    else:
        raise InsufficientData("longest-run test needs at least 128 bits")
    blocks = n // m
    runs_ = _longest_runs(bits[: blocks * m].reshape(blocks, m))
    k = len(probs) - 1
    classes = np.clip(runs_ - v0, 0, k)
    nu = np.bincount(classes, minlength=k + 1)
    expected = blocks * np.array(probs)
    chi2 = float(((nu - expected) ** 2 / expected).sum())
    return TestResult(
        "Test for the Longest Run of Ones in a Block", (igamc(k / 2, chi2 / 2),), alpha, {"chi2": chi2, "nu": nu.tolist()}
    )


# --- spectral --------------------------------------------------------------------


def dft_spectral(seq, alpha: float = DEFAULT_ALPHA) -> TestResult:
    bits = as_sequence(seq).bits
    n = bits.size
    if n < 2:
        raise InsufficientData("spectral test needs at least 2 bits")
    x = 2.0 * bits - 1.0
    mod = np.abs(np.fft.fft(x))[: n // 2]
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2
    n1 = int(np.count_nonzero(mod < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4)
    return TestResult("Discrete Fourier Transform (Spectral) Test", (_clip(erfc(abs(d) / math.sqrt(2))),), alpha, {"d": d, "N1": n1})


# --- template matching -------------------------------------------------------------

DEFAULT_TEMPLATE = "000000001"


def aperiodic_templates(m: int) -> list[str]:
    """Templates of length m that cannot overlap a shifted copy of themselves."""
    out = []
    for tup in product("01", repeat=m):
        t = "".join(tup)
        if all(t[s:] != t[: m - s] for s in range(1, m)):
            out.append(t)
    return out


def _count_non_overlapping(block_hits: np.ndarray, m: int) -> int:
    count, next_free = 0, -1
    for pos in np.flatnonzero(block_hits):
        if pos >= next_free:
            count += 1
            next_free = pos + m
    return count


def non_overlapping_template(
    seq, template: str = DEFAULT_TEMPLATE, m: int | None = None, blocks: int = 8, alpha: float = DEFAULT_ALPHA
) -> TestResult:
    bits = as_sequence(seq).bits
    m = len(template) if m is None else m
    if len(template) != m:
        raise ValueError("template length does not match m")
    n = bits.size
    big_m = n // blocks
    if big_m < m:
        raise InsufficientData("blocks shorter than the template")
    target = int(template, 2)
    w = np.empty(blocks, dtype=np.int64)
    for j in range(blocks):
        hits = _windows(bits[j * big_m:(j + 1) * big_m], m, circular=False) == target
        w[j] = _count_non_overlapping(hits, m)
    mu = (big_m - m + 1) / 2**m
    var = big_m * (1 / 2**m - (2 * m - 1) / 2 ** (2 * m))
    chi2 = float(((w - mu) ** 2).sum() / var)
    return TestResult(
        "Non-overlapping Template Matching Test", (igamc(blocks / 2, chi2 / 2),), alpha, {"chi2": chi2, "W": w.tolist()}
    )


# corrected class probabilities for m = 9, M = 1032, K = 5; the reference
# implementation (and its published example output) uses the Poisson-style
# approximation below instead, so that stays the default
CORRECTED_PI_9_1032 = (0.364091, 0.185659, 0.139381, 0.100571, 0.0704323, 0.139865)


def overlapping_probabilities(m: int, big_m: int, k: int, corrected: bool = False) -> tuple[float, ...]:
    if corrected:
        if (m, big_m, k) != (9, 1032, 5):
            raise ValueError("corrected probabilities exist only for m=9, M=1032, K=5")
        return CORRECTED_PI_9_1032
    eta = (big_m - m + 1) / 2**m / 2
    pis = [math.exp(-eta)]
    for u in range(1, k):
        s = sum(math.comb(u - 1, l - 1) * eta**l / math.factorial(l) for l in range(1, u + 1))
        pis.append(math.exp(-eta) / 2**u * s)
    pis.append(1.0 - sum(pis))
    return tuple(pis)


def overlapping_template(
    seq, m: int = 9, block: int = 1032, k: int = 5, alpha: float = DEFAULT_ALPHA, corrected: bool = False
) -> TestResult:
    bits = as_sequence(seq).bits
    n = bits.size
    blocks = n // block
    if blocks < 1:
        raise InsufficientData("sequence shorter than one block")
    ones = (1 << m) - 1
    mat = bits[: blocks * block].reshape(blocks, block)
    counts = np.zeros(blocks, dtype=np.int64)
    for r in range(blocks):
        counts[r] = int(np.count_nonzero(_windows(mat[r], m, circular=False) == ones))
    nu = np.bincount(np.minimum(counts, k), minlength=k + 1)
    pis = np.array(overlapping_probabilities(m, block, k, corrected))
    expected = blocks * pis
    chi2 = float(((nu - expected) ** 2 / expected).sum())
    return TestResult("Overlapping Template Matching Test", (igamc(k / 2, chi2 / 2),), alpha, {"chi2": chi2, "nu": nu.tolist()})


# --- linear complexity -------------------------------------------------------------


def berlekamp_massey_batch(blocks: np.ndarray) -> np.ndarray:
    """Linear complexity of every row of a 0/1 matrix, all rows in lockstep."""
    s = np.asarray(blocks, dtype=np.uint8)
    rows, n = s.shape
    c = np.zeros((rows, n + 1), dtype=np.uint8)
    b = np.zeros((rows, n + 1), dtype=np.uint8)
    c[:, 0] = b[:, 0] = 1
    length = np.zeros(rows, dtype=np.int64)
    last = np.full(rows, -1, dtype=np.int64)
    cols = np.arange(n + 1)
    for i in range(n):
        d = (c[:, 1:i + 1] & s[:, i - 1::-1][:, :i]).sum(axis=1) if i else np.zeros(rows, dtype=np.int64)
        d = (d + s[:, i]) & 1
        upd = np.flatnonzero(d)
        if upd.size == 0:
            continue
        shift = (i - last[upd])[:, None]
        src = cols[None, :] - shift
        shifted = np.where(src >= 0, np.take_along_axis(b[upd], np.clip(src, 0, n), axis=1), 0).astype(np.uint8)
        old = c[upd].copy()
        c[upd] ^= shifted
        grow = 2 * length[upd] <= i
        g = upd[grow]
        length[g] = i + 1 - length[g]
        last[g] = i
        b[g] = old[grow]
    return length


# first entry as in the reference implementation (exact value 0.010417)
_LINEAR_COMPLEXITY_PI = (0.01047, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833)


def linear_complexity(seq, m: int = 500, alpha: float = DEFAULT_ALPHA) -> TestResult:
    bits = as_sequence(seq).bits
    blocks = bits.size // m
    if blocks < 1:
        raise InsufficientData("sequence shorter than one block")
    lc = berlekamp_massey_batch(bits[: blocks * m].reshape(blocks, m))
    sign = -1 if m % 2 else 1
    mu = m / 2 + (9 + (-1) ** (m + 1)) / 36 - (m / 3 + 2 / 9) / 2**m
    t = sign * (lc - mu) + 2 / 9
    edges = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    nu = np.bincount(np.searchsorted(edges, t, side="left"), minlength=7)
    expected = blocks * np.array(_LINEAR_COMPLEXITY_PI)
    chi2 = float(((nu - expected) ** 2 / expected).sum())
    return TestResult("Linear Complexity Test", (igamc(3.0, chi2 / 2),), alpha, {"chi2": chi2, "nu": nu.tolist()})


# --- serial and approximate entropy ----------------------------------------------------


def _weighted_square_sum(bits: np.ndarray, m: int) -> int:
    """2^m times the sum of squared m-bit pattern counts, as an exact integer."""
    if m <= 0:
        return bits.size * bits.size  # psi^2_0 = 0 by convention
    counts = np.bincount(_windows(bits, m, circular=True), minlength=1 << m)
    return (1 << m) * sum(int(c) * int(c) for c in counts)


def serial(seq, m: int = 2, alpha: float = DEFAULT_ALPHA) -> TestResult:
    bits = as_sequence(seq).bits
    if m < 2:
        raise ValueError("serial test needs m >= 2")
    if bits.size < m:
        raise InsufficientData("sequence shorter than the pattern length")
    # psi^2_k = S_k / n - n; differences are formed on the integers to avoid cancellation
    n = bits.size
    s0, s1, s2 = (_weighted_square_sum(bits, k) for k in (m, m - 1, m - 2))
    d1 = (s0 - s1) / n
    d2 = (s0 - 2 * s1 + s2) / n
    pv = (igamc(2 ** (m - 2), d1 / 2), igamc(2 ** (m - 3), d2 / 2))
    return TestResult("Serial Test", pv, alpha, {"del1": d1, "del2": d2})


def _phi(bits: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    n = bits.size
    counts = np.bincount(_windows(bits, m, circular=True), minlength=1 << m)
    c = counts[counts > 0] / n
    return float((c * np.log(c)).sum())


def approximate_entropy(seq, m: int = 2, alpha: float = DEFAULT_ALPHA) -> TestResult:
    bits = as_sequence(seq).bits
    n = bits.size
    if n < m + 1:
        raise InsufficientData("sequence shorter than the pattern length")
    apen = _phi(bits, m) - _phi(bits, m + 1)
    chi2 = max(0.0, 2.0 * n * (math.log(2) - apen))
    return TestResult("Approximate Entropy Test", (igamc(2 ** (m - 1), chi2 / 2),), alpha, {"ApEn": apen, "chi2": chi2})


# --- cumulative sums ----------------------------------------------------------------------


def _cusum_p(n: int, z: int) -> float:
    if z == 0:
        return 1.0
    sq = math.sqrt(n)
    total1 = 0.0
    for k in range(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1):
        total1 += normal_cdf((4 * k + 1) * z / sq) - normal_cdf((4 * k - 1) * z / sq)
    total2 = 0.0
    for k in range(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1):
        total2 += normal_cdf((4 * k + 3) * z / sq) - normal_cdf((4 * k + 1) * z / sq)
    return _clip(1.0 - total1 + total2)


def cumulative_sums(seq, mode: str = "both", alpha: float = DEFAULT_ALPHA) -> TestResult:
    """mode: "forward", "backward" or "both" (two p-values, forward first)."""
    bits = as_sequence(seq).bits
    n = bits.size
    if n == 0:
        raise InsufficientData("empty sequence")
    x = 2 * bits.astype(np.int64) - 1
    modes = {"forward": ("forward",), "backward": ("backward",), "both": ("forward", "backward")}[mode]
    pvals = []
    for md in modes:
        walk = np.cumsum(x if md == "forward" else x[::-1])
        pvals.append(_cusum_p(n, int(np.abs(walk).max())))
    return TestResult("Cumulative Sums Test", tuple(pvals), alpha)


# --- registry -------------------------------------------------------------------------------

# (function, recommended minimum length in bits)
TESTS = (
    (frequency_monobit, 100),
    (block_frequency, 100),
    (runs, 100),
    (longest_run_of_ones, 128),
    (dft_spectral, 1000),
    (non_overlapping_template, 4096),
    (overlapping_template, 1_000_000),
    (linear_complexity, 1_000_000),
    (serial, 100),
    (approximate_entropy, 100),
    (cumulative_sums, 100),
)

TEST_NAMES = (
    "Frequency (Monobit) Test",
    "Frequency Test within a Block",
    "Runs Test",
    "Test for the Longest Run of Ones in a Block",
    "Discrete Fourier Transform (Spectral) Test",
    "Non-overlapping Template Matching Test",
    "Overlapping Template Matching Test",
    "Linear Complexity Test",
    "Serial Test",
    "Approximate Entropy Test",
    "Cumulative Sums Test",
)


def run_all(seq: BitSequence, alpha: float = DEFAULT_ALPHA) -> list[TestResult | None]:
    """All eleven tests on one sequence; None marks a test skipped for length."""
    seq = as_sequence(seq)
    out: list[TestResult | None] = []
    for fn, min_bits in TESTS:
        if len(seq) < min_bits:
            out.append(None)
            continue
        try:
            out.append(fn(seq, alpha=alpha))
        except InsufficientData:
            out.append(None)
    return out
