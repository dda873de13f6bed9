"""Benchmark harness: Jacobi variants, weak scaling, CSV output."""

from .jacobi import (
    BenchmarkConfig,
    BenchmarkRecord,
    VerifyReport,
    baseline_step,
    checksum,
    run_jacobi,
    run_weak_scaling,
    verify,
    weak_extents,
)
from .report import HEADER, emit_csv, format_csv
