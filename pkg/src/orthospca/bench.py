"""Per-step diagnostics: variance, timing, and orthogonality drift."""

from __future__ import annotations

import time

import numpy as np

from .bnb import iter_bnb
from .blocks import iter_threshold
from .certify import iter_deflation, max_pairwise_angle_deviation
from .exact import iter_exact
from .linalg import as_sym

BENCH_COLUMNS = (
    "r", "mode", "variance_r", "cumulative_variance", "step_time_seconds",
    "max_angle_deviation_after_r",
)
MODES = ("exact", "bnb", "threshold", "deflation")


def step_iterator(Q, p, r_max, mode, eps=0.0, delta=0.0):
    if mode == "exact":
        return iter_exact(Q, p, r_max)
    if mode == "bnb":
        return (c for c, _ in iter_bnb(Q, p, r_max, eps))
    if mode == "threshold":
        return iter_threshold(Q, p, delta, eps, r_max)
    if mode == "deflation":
        return iter_deflation(Q, p, r_max)
    raise ValueError(f"unknown mode {mode!r}")


def bench_rows(Q, p: int, r_max: int, modes=("exact", "deflation"), eps: float = 0.0,
               delta: float = 0.0) -> list:
    """One row per (mode, r) with the columns in :data:`BENCH_COLUMNS`."""
    Q = as_sym(Q)
    rows = []
    for mode in modes:
        steps = step_iterator(Q, p, r_max, mode, eps, delta)
        vectors, total = [], 0.0
        for r in range(1, r_max + 1):
            t0 = time.perf_counter()
            comp = next(steps)
            dt = time.perf_counter() - t0
            vectors.append(comp.vector())
            total += comp.variance
            rows.append({
                "r": r,
                "mode": mode,
                "variance_r": comp.variance,
                "cumulative_variance": total,
                "step_time_seconds": dt,
                "max_angle_deviation_after_r": max_pairwise_angle_deviation(np.array(vectors)),
            })
    return rows
