"""SP800-22 subset, entropy estimators and report tables."""

from .battery import (
    DEFAULT_ALPHA,
    TEST_NAMES,
    InsufficientData,
    TestResult,
    approximate_entropy,
    block_frequency,
    cumulative_sums,
    dft_spectral,
    frequency_monobit,
    linear_complexity,
    longest_run_of_ones,
    non_overlapping_template,
    overlapping_template,
    run_all,
    runs,
    serial,
)
from .entropy import closed_form_entropy, empirical_shannon_entropy, ones_ratio_blocks
from .sequence import BitSequence
from .special import ConvergenceError, erfc, igamc
from .suite import SuiteReport, SuiteRow, aggregate, run_suite
