"""Run the battery over many sequences and tabulate the results."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable

from .battery import DEFAULT_ALPHA, TEST_NAMES, TestResult, run_all
from .sequence import BitSequence

COLUMNS = ("Test Case Name", "Total Tests", "Average P-Values", "Pass", "Fail", "Pass %")


@dataclass(frozen=True)
class SuiteRow:
    name: str
    total: int
    average_p: float
    passed: int
    failed: int
    skipped: int = 0

    @property
    def pass_pct(self) -> float:
        return 100.0 * self.passed / self.total if self.total else 0.0


@dataclass(frozen=True)
class SuiteReport:
    alpha: float
    sequences: int
    bits_per_sequence: int
    rows: tuple[SuiteRow, ...]
    results: tuple[tuple[TestResult | None, ...], ...]  # [sequence][test]

    @property
    def total(self) -> SuiteRow:
        tests = sum(r.total for r in self.rows)
        mean = sum(r.average_p * r.total for r in self.rows) / tests if tests else 0.0
        return SuiteRow(
            "Total",
            tests,
            mean,
            sum(r.passed for r in self.rows),
            sum(r.failed for r in self.rows),
            sum(r.skipped for r in self.rows),
        )

    @property
    def pass_rate(self) -> float:
        return self.total.pass_pct / 100.0

    def to_table(self) -> str:
        buf = io.StringIO()
        buf.write(f"# alpha={self.alpha} sequences={self.sequences} bits={self.bits_per_sequence}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows + (self.total,):
            w.writerow((r.name, r.total, f"{r.average_p:.4f}", r.passed, r.failed, f"{r.pass_pct:.2f}"))
        return buf.getvalue()

    def to_record(self) -> str:
        doc = {
            "alpha": self.alpha,
            "sequences": self.sequences,
            "bits_per_sequence": self.bits_per_sequence,
            "rows": [dict(asdict(r), pass_pct=r.pass_pct) for r in self.rows],
            "total": dict(asdict(self.total), pass_pct=self.total.pass_pct),
        }
        return json.dumps(doc, indent=1, sort_keys=True)


def aggregate(results: list[list[TestResult | None]], alpha: float, bits: int) -> SuiteReport:
    rows = []
    for t, name in enumerate(TEST_NAMES):
        done = [seq[t] for seq in results if seq[t] is not None]
        skipped = len(results) - len(done)
        if done:
            passed = sum(r.passed for r in done)
            avg = sum(r.mean_p for r in done) / len(done)
        else:
            passed, avg = 0, 0.0
        rows.append(SuiteRow(name, len(done), avg, passed, len(done) - passed, skipped))
    return SuiteReport(alpha, len(results), bits, tuple(rows), tuple(tuple(r) for r in results))


def _run_one(args) -> list[TestResult | None]:
    data, bits, alpha = args
    return run_all(BitSequence.from_bytes(data, bits), alpha)


def run_suite(
    source: Callable[[int], bytes] | Iterable[bytes],
    sequences: int = 16,
    bits_per_sequence: int = 1 << 20,
    alpha: float = DEFAULT_ALPHA,
    workers: int = 1,
) -> SuiteReport:
    """``source`` is either a callable ``nbytes -> bytes`` read once per
    sequence, or an iterable yielding one byte string per sequence."""
    nbytes = -(-bits_per_sequence // 8)
    if callable(source):
        chunks = [source(nbytes) for _ in range(sequences)]
    else:
        it = iter(source)
        chunks = [next(it) for _ in range(sequences)]
    for c in chunks:
        if len(c) < nbytes:
            raise ValueError("source returned fewer bytes than requested")
    jobs = [(bytes(c[:nbytes]), bits_per_sequence, alpha) for c in chunks]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_one, jobs))  # map keeps sequence order
    else:
        results = [_run_one(j) for j in jobs]
    return aggregate(results, alpha, bits_per_sequence)
