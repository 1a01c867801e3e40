"""Exact orthogonal sparse PCA by support enumeration.

For each candidate support Y of size p the previous components are restricted
to Y, orthonormalized, and the top eigenpair of ``P_Y Q_Y P_Y`` is taken as the
best unit vector on Y orthogonal to everything found so far.  The best support
over all ``C(n, p)`` candidates gives the next component.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .linalg import (
    GS_TOL,
    IndexSet,
    _top_eigpair,
    as_sym,
    complete_basis,
    orthonormalize,
)

TIE_TOL = 1e-12
# a projected eigenvector shorter than this is treated as annihilated: normalizing
# it would amplify rounding in span(U) past the orthogonality budget
PROJ_TOL = 1e-6
THREADS_ENV = "ORTHO_SPCA_THREADS"


@dataclass(frozen=True)
class SparseComponent:
    """A unit vector stored as (support, values) with its variance under Q.

    ``evaluations`` counts the candidate supports examined to produce it.
    """

    support: IndexSet
    values: np.ndarray = field(repr=False)
    variance: float
    sparsity_relaxed: bool = False
    evaluations: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.shape != (len(self.support),):
            raise ValueError("values must match the support size")

    @property
    def n(self) -> int:
        return self.support.parent_dim

    def vector(self) -> np.ndarray:
        out = np.zeros(self.support.parent_dim)
        out[self.support.array()] = self.values
        return out

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))

    @classmethod
    def from_vector(cls, x, Q, support=None, **kw) -> "SparseComponent":
        x = np.asarray(x, dtype=float)
        if support is None:
            support = IndexSet(tuple(np.flatnonzero(x)), x.shape[0])
        idx = support.array()
        variance = float(x @ np.asarray(Q) @ x)
        return cls(support, x[idx], variance, **kw)


@dataclass
class SpcaSolution:
    """An ordered sequence of components for one (Q, p) problem."""

    components: list
    Q_ref: str
    p: int
    mode: str = "exact"
    eps: float = 0.0
    delta: float = 0.0
    n: int = 0

    @property
    def K(self) -> int:
        return len(self.components)

    @property
    def variances(self) -> np.ndarray:
        return np.array([c.variance for c in self.components], dtype=float)

    def vectors(self) -> np.ndarray:
        """K x n array with one embedded component per row."""
        if not self.components:
            return np.zeros((0, self.n))
        return np.vstack([c.vector() for c in self.components])

    @property
    def slack(self) -> float:
        """Per-step optimality slack the producing solver guarantees."""
        return 2 * self.p * self.delta + self.eps

    @property
    def evaluations(self) -> int:
        return sum(c.evaluations for c in self.components)


@dataclass(frozen=True)
class ReducedResult:
    """Outcome of the reduced PCA problem on one support."""

    lam: float
    z: Optional[np.ndarray]
    m: int

    @property
    def feasible(self) -> bool:
        return self.z is not None


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n <= 0:
        return os.cpu_count() or 1
    return n


def _previous_matrix(previous: Sequence[SparseComponent], n: int) -> np.ndarray:
    if not previous:
        return np.zeros((0, n))
    for c in previous:
        if c.n != n:
            raise ValueError(f"previous component lives in R^{c.n}, expected R^{n}")
    return np.vstack([c.vector() for c in previous])


def _reduced(q_y: np.ndarray, v: np.ndarray) -> ReducedResult:
    """Reduced PCA for one support given restricted previous components ``v``
    (one per row, possibly empty)."""
    size = q_y.shape[0]
    u = orthonormalize(v, GS_TOL) if v.shape[0] else np.zeros((0, size))
    m = u.shape[0]
    if m == 0:
        lam, w = _top_eigpair(q_y)
        return ReducedResult(lam, w, 0)
    if m == size:
        return ReducedResult(0.0, None, m)
    proj = np.eye(size) - u.T @ u
    lam, w = _top_eigpair(proj @ q_y @ proj)
    z = proj @ w
    norm = np.linalg.norm(z)
    if norm > PROJ_TOL:
        z = z / norm
        z -= u.T @ (u @ z)
        return ReducedResult(lam, z / np.linalg.norm(z), m)
    # top eigenvector fell (numerically) inside span(U): either the feasible
    # directions all have negative curvature or the top eigenspace is
    # degenerate, so solve on an explicit complement basis instead
    comp = complete_basis(u, size)
    lam, w = _top_eigpair(comp @ q_y @ comp.T)
    z = comp.T @ w
    return ReducedResult(lam, z / np.linalg.norm(z), m)


def reduced_pca_on_support(Q, Y: IndexSet, previous: Sequence[SparseComponent] = ()) -> ReducedResult:
    """Best unit vector supported on ``Y`` and orthogonal to ``previous``.

    Returns a :class:`ReducedResult`; when the restricted previous components
    span all of R^|Y| the support admits no orthogonal vector and the result
    has ``z=None`` and ``lam=0``.
    """
    Q = as_sym(Q)
    if len(Y) < 1:
        raise ValueError("support must be non-empty")
    if Y.parent_dim != Q.n:
        raise ValueError("support does not index Q")
    a = np.asarray(Q)
    idx = Y.array()
    x = _previous_matrix(previous, Q.n)
    return _reduced(a[np.ix_(idx, idx)], x[:, idx])


def _evaluate(a: np.ndarray, x: np.ndarray, supports: Sequence[tuple]):
    out = []
    for y in supports:
        idx = list(y)
        res = _reduced(a[np.ix_(idx, idx)], x[:, idx])
        out.append(res)
    return out


def _evaluate_all(a, x, supports, workers):
    if workers <= 1 or len(supports) < 64:
        return _evaluate(a, x, supports)
    size = -(-len(supports) // workers)
    chunks = [supports[i:i + size] for i in range(0, len(supports), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: _evaluate(a, x, c), chunks))
    return [r for part in parts for r in part]


def select_best(results):
    """Index of the winning support: maximal lam, then lexicographically
    smallest support among those within ``TIE_TOL`` of the maximum."""
    best = -np.inf
    for r in results:
        if r.feasible and r.lam > best:
            best = r.lam
    if best == -np.inf:
        return None
    for i, r in enumerate(results):
        if r.feasible and r.lam >= best - TIE_TOL:
            return i
    raise AssertionError("unreachable")


def dense_fallback(Q, previous: Sequence[SparseComponent], evaluations: int = 0) -> SparseComponent:
    """Best dense unit vector orthogonal to ``previous``.

    Used when no p-sparse support admits an orthogonal vector; the result is
    flagged ``sparsity_relaxed``.
    """
    Q = as_sym(Q)
    n = Q.n
    x = _previous_matrix(previous, n)
    basis = orthonormalize(x) if x.shape[0] else np.zeros((0, n))
    comp = complete_basis(basis, n)
    if comp.shape[0] == 0:
        raise ValueError("previous components already span R^n")
    lam, w = _top_eigpair(comp @ np.asarray(Q) @ comp.T)
    z = comp.T @ w
    z /= np.linalg.norm(z)
    full = IndexSet(tuple(range(n)), n)
    return SparseComponent(full, z, float(z @ np.asarray(Q) @ z), True, evaluations)


def solve_kth_exact(Q, p: int, previous: Sequence[SparseComponent] = ()) -> SparseComponent:
    """Globally optimal k-th component by enumerating every size-p support."""
    Q = as_sym(Q)
    n = Q.n
    if not 1 <= p <= n:
        raise ValueError(f"sparsity p={p} must satisfy 1 <= p <= {n}")
    a = np.asarray(Q)
    x = _previous_matrix(previous, n)
    supports = list(itertools.combinations(range(n), p))
    results = _evaluate_all(a, x, supports, worker_count())
    best = select_best(results)
    if best is None:
        return dense_fallback(Q, previous, len(supports))
    y = IndexSet(supports[best], n)
    z = results[best].z
    idx = y.array()
    variance = float(z @ a[np.ix_(idx, idx)] @ z)
    return SparseComponent(y, z, variance, False, len(supports))


def iter_exact(Q, p: int, K: int, prefix: Sequence[SparseComponent] = ()) -> Iterator[SparseComponent]:
    """Yield components ``len(prefix)+1 .. K`` one at a time."""
    Q = as_sym(Q)
    found = list(prefix)
    while len(found) < K:
        c = solve_kth_exact(Q, p, found)
        found.append(c)
        yield c


def solve_sequence(Q, p: int, K: int, prefix: Sequence[SparseComponent] = ()) -> SpcaSolution:
    """Run the exact k-th solver for k = 1..K, each step seeing all earlier
    components.

    ``prefix`` fixes the first components instead of solving for them, which
    is how alternative optimal paths are followed.
    """
    Q = as_sym(Q)
    if not 1 <= K <= Q.n:
        raise ValueError(f"K={K} must satisfy 1 <= K <= {Q.n}")
    if len(prefix) > K:
        raise ValueError("prefix longer than K")
    comps = list(prefix) + list(iter_exact(Q, p, K, prefix))
    return SpcaSolution(comps, Q.fingerprint(), p, "exact", 0.0, 0.0, Q.n)

