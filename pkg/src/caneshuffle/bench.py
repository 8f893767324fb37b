"""Single-thread, batch-1 inference latency benchmark."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CaneError

MIN_RUNS = 30
MIN_WARMUP = 10

# Published reference profile for the deployed channel-shuffle model, shown
# beside measured numbers for context (never asserted: hardware-dependent).
REFERENCE_PROFILE = {
    "params_m": 2.19,
    "macs_mmac": 152.43,
    "model_size_mb": 9.26,
    "latency_ms": 4.14,
}


@dataclass
class BenchReport:
    warmup: int
    runs: int
    samples_ms: list[float] = field(default_factory=list)
    total_params: int = 0
    total_macs: int = 0
    model_file_bytes: int | None = None

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.samples_ms))

    @property
    def median_ms(self) -> float:
        return float(np.median(self.samples_ms))

    @property
    def p95_ms(self) -> float:
        return float(np.percentile(self.samples_ms, 95))

    @property
    def min_ms(self) -> float:
        return float(np.min(self.samples_ms))

    @property
    def max_ms(self) -> float:
        return float(np.max(self.samples_ms))

    def to_dict(self) -> dict:
        return {
            "warmup": self.warmup,
            "runs": self.runs,
            "mean_ms": self.mean_ms,
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "min_ms": self.min_ms,
            "max_ms": self.max_ms,
            "samples_ms": self.samples_ms,
            "total_params": self.total_params,
            "total_macs": self.total_macs,
            "model_file_bytes": self.model_file_bytes,
            "reference_profile": REFERENCE_PROFILE,
        }


def bench(model, runs: int = MIN_RUNS, warmup: int = MIN_WARMUP,
          model_file_bytes: int | None = None) -> BenchReport:
    """Time `runs` single-image forwards after `warmup` excluded forwards."""
    if runs < MIN_RUNS:
        raise CaneError(f"need at least {MIN_RUNS} measured runs, got {runs}")
    if warmup < MIN_WARMUP:
        raise CaneError(f"need at least {MIN_WARMUP} warmup runs, got {warmup}")
    size = model.config.input_size
    rng = np.random.default_rng(0)
    x = rng.standard_normal((1, 3, size, size)).astype(np.float32)

    for _ in range(warmup):
        model.forward(x)

    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        model.forward(x)
        samples.append((time.perf_counter() - t0) * 1000.0)

    cost = model.cost_report(model_file_bytes)
    return BenchReport(
        warmup=warmup,
        runs=runs,
        samples_ms=samples,
        total_params=cost.total_params,
        total_macs=cost.total_macs,
        model_file_bytes=model_file_bytes,
    )
