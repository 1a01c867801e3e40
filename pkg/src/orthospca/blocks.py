"""Threshold block-diagonalization and the block-wise solvers built on it.

Small entries of Q are zeroed, the remaining sparsity graph is split into
connected components, and Q is permuted to ``A = diag(A_1, ..., A_d)``.  Each
block is then solved on its own; components from different blocks are merged
in order of variance, either all at once (:func:`merge_sorted`) or lazily
through a candidate pool (:func:`threshold_spca`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .bnb import solve_kth_bnb
from .exact import SparseComponent, SpcaSolution, dense_fallback, solve_kth_exact
from .linalg import IndexSet, SymMatrix, as_sym


class UnionFind:
    """Disjoint sets over ``0..n-1``; the representative is the smallest member."""

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if rx < ry:
            self.parent[ry] = rx
        else:
            self.parent[rx] = ry


@dataclass(frozen=True)
class BlockStructure:
    """Permutation and blocks of a thresholded matrix.

    ``permutation[i]`` is the original index placed at position ``i`` of A, so
    ``A = Qd[perm][:, perm]``.
    """

    permutation: tuple
    components: tuple
    blocks: tuple
    delta: float
    n: int

    @property
    def d(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> list:
        return [b.n for b in self.blocks]

    @property
    def offsets(self) -> list:
        out, acc = [], 0
        for b in self.blocks:
            out.append(acc)
            acc += b.n
        return out

    def block_diag(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for off, b in zip(self.offsets, self.blocks):
            a[off:off + b.n, off:off + b.n] = np.asarray(b)
        return a

    def to_original(self, z) -> np.ndarray:
        """``Pi^T z``: map a vector in A's coordinates back to Q's."""
        z = np.asarray(z, dtype=float)
        u = np.empty_like(z)
        u[np.asarray(self.permutation)] = z
        return u

    def to_permuted(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float)[np.asarray(self.permutation)]


def threshold_matrix(Q, delta: float) -> SymMatrix:
    """Zero every entry (diagonal included) with ``|Q_ij| < delta``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    a = np.array(np.asarray(as_sym(Q)))
    a[np.abs(a) < delta] = 0.0
    return SymMatrix._trusted(a)


def connected_components(Qd) -> list:
    """Components of the graph with an edge wherever an off-diagonal entry is
    nonzero; each sorted ascending, ordered by smallest member."""
    a = np.asarray(as_sym(Qd))
    n = a.shape[0]
    uf = UnionFind(n)
    rows, cols = np.nonzero(np.triu(a, 1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        uf.union(i, j)
    groups = {}
    for j in range(n):
        groups.setdefault(uf.find(j), []).append(j)
    return [IndexSet(tuple(groups[r]), n) for r in sorted(groups)]


def block_diagonalize(Q, delta: float) -> BlockStructure:
    Qd = threshold_matrix(Q, delta)
    comps = connected_components(Qd)
    perm = tuple(j for c in comps for j in c)
    blocks = tuple(Qd.submatrix(c) for c in comps)
    return BlockStructure(perm, tuple(comps), blocks, float(delta), Qd.n)


def predicted_cost(structure: BlockStructure, p: int):
    """Support counts ``(C(n, p), sum_i C(n_i, min(p, n_i)))``."""
    return comb(structure.n, p), sum(comb(m, min(p, m)) for m in structure.sizes)


def _pad(comp: SparseComponent, offset: int, n: int) -> SparseComponent:
    sup = IndexSet(tuple(offset + j for j in comp.support), n)
    return SparseComponent(sup, comp.values, comp.variance, comp.sparsity_relaxed, comp.evaluations)


def merge_sorted(block_solutions: Sequence[SpcaSolution], structure: BlockStructure) -> SpcaSolution:
    """Zero-pad every block component into A's coordinates and sort by
    variance (descending; ties by block index, then position in the block)."""
    if len(block_solutions) != structure.d:
        raise ValueError(f"expected {structure.d} block solutions, got {len(block_solutions)}")
    n = structure.n
    tagged = []
    for b, (sol, blk, off) in enumerate(zip(block_solutions, structure.blocks, structure.offsets)):
        for c in sol.components:
            if c.n != blk.n:
                raise ValueError(f"block {b} component has dimension {c.n}, block has {blk.n}")
        for j, c in enumerate(sol.components):
            tagged.append((-c.variance, b, j, _pad(c, off, n)))
    tagged.sort(key=lambda t: t[:3])
    p = max((s.p for s in block_solutions), default=0)
    eps = max((s.eps for s in block_solutions), default=0.0)
    a = structure.block_diag()
    return SpcaSolution([t[3] for t in tagged], SymMatrix._trusted(a).fingerprint(), p,
                        "merged", eps, 0.0, n)


@dataclass
class _BlockState:
    matrix: SymMatrix
    p: int
    offset: int
    previous: list = field(default_factory=list)
    candidate: SparseComponent = None

    @property
    def exhausted(self) -> bool:
        return len(self.previous) >= self.matrix.n


class CandidatePool:
    """Next-component candidates, one per non-exhausted block.

    After a block's candidate is emitted its replacement is computed lazily,
    at the start of the next :meth:`pop`.  ``last_evaluations`` holds the
    number of supports examined by the most recent pop.
    """

    def __init__(self, structure: BlockStructure, p: int, solve):
        self.structure = structure
        self._solve = solve
        self._stale = None
        self.states = [
            _BlockState(blk, min(p, blk.n), off)
            for blk, off in zip(structure.blocks, structure.offsets)
        ]
        self.last_evaluations = 0
        self._pending = sum(self._refresh(s) for s in self.states)

    def _refresh(self, s: _BlockState) -> int:
        s.candidate = None if s.exhausted else self._solve(s.matrix, s.p, s.previous)
        return 0 if s.candidate is None else s.candidate.evaluations

    @property
    def emitted(self) -> list:
        return [len(s.previous) for s in self.states]

    def live(self) -> list:
        return [b for b, s in enumerate(self.states) if s.candidate is not None]

    def pop(self):
        """Emit the best candidate as ``(block, component in A coordinates)``,
        or None once every block is exhausted."""
        evals = self._pending
        self._pending = 0
        if self._stale is not None:
            evals += self._refresh(self.states[self._stale])
            self._stale = None
        self.last_evaluations = evals
        live = self.live()
        if not live:
            return None
        b = min(live, key=lambda i: (-self.states[i].candidate.variance, i))
        s = self.states[b]
        comp = s.candidate
        s.previous.append(comp)
        s.candidate = None
        self._stale = b
        return b, _pad(comp, s.offset, self.structure.n)


def _block_solver(eps: float, solver: str):
    if solver not in ("exact", "bnb"):
        raise ValueError(f"unknown block solver {solver!r}")
    if eps == 0 or solver == "exact":
        return solve_kth_exact

    def solve(A, p, previous):
        return solve_kth_bnb(A, p, previous, eps)[0]

    return solve


def iter_threshold(Q, p: int, delta: float, eps: float = 0.0, K: int = None,
                   solver: str = "bnb", structure: BlockStructure = None) -> Iterator:
    """Yield original-coordinate components ``u_1, u_2, ...`` from the pool.

    Each yielded component carries its variance under the original Q.
    """
    Q = as_sym(Q)
    n = Q.n
    K = n if K is None else K
    if not 1 <= p <= n:
        raise ValueError(f"sparsity p={p} must satisfy 1 <= p <= {n}")
    if not 1 <= K <= n:
        raise ValueError(f"K={K} must satisfy 1 <= K <= {n}")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    structure = structure or block_diagonalize(Q, delta)
    pool = CandidatePool(structure, p, _block_solver(eps, solver))
    emitted = []
    for _ in range(K):
        step = pool.pop()
        if step is None:
            comp = dense_fallback(Q, emitted)
        else:
            _, z = step
            u = structure.to_original(z.vector())
            support = IndexSet.of((structure.permutation[j] for j in z.support), n)
            comp = SparseComponent.from_vector(
                u, Q, support,
                sparsity_relaxed=z.sparsity_relaxed,
                evaluations=pool.last_evaluations,
            )
        emitted.append(comp)
        yield comp


@dataclass
class ThresholdSolution(SpcaSolution):
    structure: BlockStructure = None


def threshold_spca(Q, p: int, delta: float, eps: float = 0.0, K: int = None,
                   solver: str = "bnb") -> SpcaSolution:
    """First K components of the thresholded block decomposition, mapped back
    to Q's coordinates.  Each step is within ``2*p*delta + eps`` of the
    optimum of its subproblem given the returned prefix."""
    Q = as_sym(Q)
    K = Q.n if K is None else K
    structure = block_diagonalize(Q, delta)
    comps = list(iter_threshold(Q, p, delta, eps, K, solver, structure))
    return ThresholdSolution(comps, Q.fingerprint(), p, "threshold", float(eps), float(delta),
                             Q.n, structure)
