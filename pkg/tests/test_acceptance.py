"""Acceptance gate.  Every criterion prints one PASS/FAIL line with its runtime
against its budget, then asserts.  Also runnable directly:
``python3 tests/test_acceptance.py``."""

import itertools
import sys
import time

import numpy as np
import pytest

from orthospca import (
    IndexSet, SparseComponent, block_diagonalize, deflation_baseline,
    exhaustive_optimum, iter_exact, max_pairwise_angle_deviation, merge_sorted,
    predicted_cost, reduced_pca_on_support, solve_sequence, solve_sequence_bnb,
    threshold_matrix, threshold_spca,
)
from orthospca.blocks import iter_threshold
from orthospca.certify import oracle_gaps
from orthospca.synthetic import block_covariance, random_psd

PATH = np.array([[5.0, 1.0, 0.0], [1.0, 5.0, 2.0], [0.0, 2.0, 2.0]])
# first seed of default_rng(seed) -> G^T G (5x5) where deflation loses orthogonality
# at p=2; found by scanning seeds, deviation ~7.5 degrees
DEFLATION_WITNESS_SEED = 0


def _report(capsys, number, title, ok, detail, elapsed, budget):
    ok = ok and elapsed < budget
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} :: {detail} "
            f"({elapsed:.2f}s, budget {budget:.0f}s)")
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok


def criterion_1(capsys=None):
    t0 = time.perf_counter()
    sol = solve_sequence(PATH, 2, 3)
    var = sol.variances
    elapsed = time.perf_counter() - t0
    ok = (abs(var[0] - 6) <= 1e-9 and abs(var.sum() - 12) <= 1e-9
          and np.allclose(var, [6, 4, 2], atol=1e-9))
    return _report(capsys, 1, "path fixture", ok, f"variances {np.round(var, 12).tolist()}",
                   elapsed, 1)


def criterion_2(capsys=None):
    t0 = time.perf_counter()
    first = reduced_pca_on_support(PATH, IndexSet((1, 2), 3))
    forced = SparseComponent(IndexSet((1, 2), 3), first.z, first.lam)
    rest = list(iter_exact(PATH, 2, 3, prefix=[forced]))
    var = np.array([c.variance for c in [forced] + rest])
    elapsed = time.perf_counter() - t0
    ok = np.allclose(var, [6, 5, 1], atol=1e-9) and abs(var.sum() - 12) <= 1e-9
    return _report(capsys, 2, "alternate path", ok, f"variances {np.round(var, 12).tolist()}",
                   elapsed, 1)


def criterion_3(capsys=None):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_trace = worst_inner = 0.0
    cases = 0
    while cases < 100:
        n = int(rng.integers(3, 9))
        Q = random_psd(n, rng)
        for p in range(1, n + 1):
            if cases == 100:
                break
            sol = solve_sequence(Q, p, n)
            X = sol.vectors()
            gram = X @ X.T - np.eye(n)
            worst_trace = max(worst_trace, abs(sol.variances.sum() - np.trace(Q)) / np.trace(Q))
            worst_inner = max(worst_inner, float(np.abs(gram - np.diag(np.diag(gram))).max()))
            cases += 1
    elapsed = time.perf_counter() - t0
    ok = worst_trace <= 1e-8 and worst_inner <= 1e-8
    return _report(capsys, 3, "trace identity", ok,
                   f"{cases} solves, max rel trace gap {worst_trace:.1e}, "
                   f"max |inner| {worst_inner:.1e}", elapsed, 60)


def criterion_4(capsys=None):
    t0 = time.perf_counter()
    worst = {0.0: 0.0, 0.01: -np.inf, 0.1: -np.inf}
    for seed in range(50):
        rng = np.random.default_rng(400 + seed)
        n = int(rng.integers(4, 9))
        Q = random_psd(n, rng)
        p = 1 + seed % 3
        for eps in worst:
            sol = solve_sequence_bnb(Q, p, n, eps)
            gaps = oracle_gaps(Q, p, sol)
            gaps = gaps[np.isfinite(gaps)]
            # eps=0 must match the oracle in both directions
            worst[eps] = max(worst[eps], float(np.abs(gaps).max() if eps == 0 else gaps.max()))
    elapsed = time.perf_counter() - t0
    ok = worst[0.0] <= 1e-9 and all(worst[e] <= e + 1e-9 for e in (0.01, 0.1))
    detail = ", ".join(f"eps={e}: {g:.2e}" for e, g in worst.items())
    return _report(capsys, 4, "bnb vs oracle", ok, f"worst gaps {detail}", elapsed, 120)


def _block_diagonal_instance(rng):
    d = int(rng.integers(1, 5))
    sizes = [int(s) for s in rng.integers(1, 6, size=d)]
    while sum(sizes) > 12:
        sizes[int(np.argmax(sizes))] -= 1
    n = sum(sizes)
    Q = np.zeros((n, n))
    off = 0
    for s in sizes:
        Q[off:off + s, off:off + s] = random_psd(s, rng) + 0.1 * np.eye(s)
        off += s
    return Q


def criterion_5(capsys=None):
    t0 = time.perf_counter()
    worst_exact = worst_eps = 0.0
    for seed in range(40):
        rng = np.random.default_rng(500 + seed)
        # scramble so the blocks are not contiguous in Q
        A = _block_diagonal_instance(rng)
        perm = rng.permutation(A.shape[0])
        Q = A[np.ix_(perm, perm)]
        n = Q.shape[0]
        p = min(int(rng.integers(1, 4)), n)
        structure = block_diagonalize(Q, 1e-12)
        for eps in (0.0, 0.05):
            parts = []
            for blk in structure.blocks:
                pb = min(p, blk.n)
                parts.append(solve_sequence(blk, pb, blk.n) if eps == 0
                             else solve_sequence_bnb(blk, pb, blk.n, eps))
            merged = merge_sorted(parts, structure)
            A_perm = structure.block_diag()
            X = merged.vectors()
            for k, c in enumerate(merged.components):
                if c.sparsity_relaxed:
                    continue
                gap = exhaustive_optimum(A_perm, p, X[:k]) - c.variance
                if eps == 0:
                    worst_exact = max(worst_exact, abs(gap))
                else:
                    worst_eps = max(worst_eps, gap)
            assert len(merged.components) == n
    elapsed = time.perf_counter() - t0
    ok = worst_exact <= 1e-8 and worst_eps <= 0.05 + 1e-9
    return _report(capsys, 5, "decomposition merge", ok,
                   f"worst |gap| exact {worst_exact:.1e}, eps=0.05 gap {worst_eps:.1e}",
                   elapsed, 60)


def criterion_6(capsys=None):
    t0 = time.perf_counter()
    worst_margin = -np.inf
    configs = [(10, 2, 5), (9, 3, 3), (8, 4, 2), (10, 5, 2), (6, 2, 3)]
    for (n, d, b), seed, (noise, delta), eps in itertools.product(
            configs, range(3), [(0.05, 0.1), (0.1, 0.1), (0.2, 0.3)], (0.0, 0.05)):
        Q = block_covariance(n, d, b, noise=noise, seed=seed)
        for p in (1, 2, 3):
            sol = threshold_spca(Q, p, delta, eps)
            slack = 2 * p * delta + eps
            gaps = oracle_gaps(Q, p, sol)
            worst_margin = max(worst_margin, float((gaps - slack).max()))
    elapsed = time.perf_counter() - t0
    ok = worst_margin <= 1e-8
    return _report(capsys, 6, "threshold guarantee", ok,
                   f"max (oracle - var - slack) {worst_margin:.3f}", elapsed, 60)


def criterion_7(capsys=None):
    t0 = time.perf_counter()
    Q = block_covariance(20, 4, 5, seed=7)
    structure = block_diagonalize(Q, 1e-9)
    cost = predicted_cost(structure, 3)
    first = next(iter_threshold(Q, 3, 1e-9, eps=0.0, K=1, structure=structure))
    elapsed = time.perf_counter() - t0
    ok = cost == (1140, 40) and first.evaluations == cost[1]
    return _report(capsys, 7, "speedup ledger", ok,
                   f"predicted {cost}, measured evaluations {first.evaluations}", elapsed, 60)


def criterion_8(capsys=None):
    t0 = time.perf_counter()
    rng = np.random.default_rng(DEFLATION_WITNESS_SEED)
    g = rng.normal(size=(5, 5))
    Q = g.T @ g
    p, K = 2, 5
    deflated = max_pairwise_angle_deviation(deflation_baseline(Q, p, K))
    orthogonal = {
        "exact": solve_sequence(Q, p, K),
        "bnb": solve_sequence_bnb(Q, p, K, 0.0),
        "bnb-eps": solve_sequence_bnb(Q, p, K, 0.1),
        "threshold": threshold_spca(Q, p, 0.5, 0.0, K),
    }
    angles = {m: max_pairwise_angle_deviation(s) for m, s in orthogonal.items()}
    elapsed = time.perf_counter() - t0
    ok = deflated > 1e-4 and max(angles.values()) <= 1e-6
    return _report(capsys, 8, "deflation non-orthogonality", ok,
                   f"deflation {deflated:.3f} deg, orthogonal max "
                   f"{max(angles.values()):.1e} deg", elapsed, 60)


def criterion_9(capsys=None):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = -np.inf
    for _ in range(1000):
        n = int(rng.integers(2, 13))
        Q = random_psd(n, rng) * rng.uniform(0.1, 3)
        delta = float(rng.uniform(0, np.abs(Q).max()))
        p = int(rng.integers(1, n + 1))
        support = rng.choice(n, size=p, replace=False)
        u = np.zeros(n)
        u[support] = rng.normal(size=p)
        u /= np.linalg.norm(u)
        E = Q - np.asarray(threshold_matrix(Q, delta))
        worst = max(worst, abs(u @ E @ u) - p * delta)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12
    return _report(capsys, 9, "Cauchy-Schwarz bound", ok,
                   f"max |u^T (Q - Q_delta) u| - p*delta = {worst:.3f}", elapsed, 60)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion, capsys):
    assert criterion(capsys)


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
