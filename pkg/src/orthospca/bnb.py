"""Best-first branch-and-bound for the k-th orthogonal sparse PCA subproblem.

A node fixes part of the support through binary bound vectors ``l <= y <= u``.
Upper bounds come from the top eigenvalue of the projected principal submatrix
on ``{j : u[j] = 1}``; lower bounds from a projected feasible witness.  Search
stops once the gap between the best upper bound and the incumbent is at most
``eps``.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .exact import (
    PROJ_TOL,
    SparseComponent,
    SpcaSolution,
    _previous_matrix,
    _reduced,
    dense_fallback,
)
from .linalg import IndexSet, _top_eigpair, as_sym, orthonormalize

INCUMBENT_TOL = 1e-12


@dataclass(frozen=True)
class SupportBounds:
    """Branch-and-bound node: support indicator boxed between ``l`` and ``u``."""

    l: tuple
    u: tuple
    upper_bound: float = np.inf

    def __post_init__(self):
        l = tuple(int(b) for b in self.l)
        u = tuple(int(b) for b in self.u)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "u", u)
        if len(l) != len(u):
            raise ValueError("l and u must have the same length")
        if any(a not in (0, 1) or b not in (0, 1) or a > b for a, b in zip(l, u)):
            raise ValueError("bounds must be binary with l <= u")

    @classmethod
    def root(cls, n: int) -> "SupportBounds":
        return cls((0,) * n, (1,) * n)

    @property
    def n_fixed_in(self) -> int:
        return sum(self.l)

    @property
    def n_allowed(self) -> int:
        return sum(self.u)

    def free(self) -> list:
        return [j for j, (a, b) in enumerate(zip(self.l, self.u)) if a == 0 and b == 1]

    def determined_support(self, p: int) -> Optional[tuple]:
        if self.n_fixed_in == p:
            return tuple(j for j, b in enumerate(self.l) if b)
        if self.n_allowed == p:
            return tuple(j for j, b in enumerate(self.u) if b)
        return None

    def child(self, i: int, val: int) -> "SupportBounds":
        l = list(self.l)
        u = list(self.u)
        l[i] = u[i] = val
        return SupportBounds(tuple(l), tuple(u))


@dataclass
class BnbCertificate:
    LB: float
    UB: float
    eps: float
    nodes_explored: int = 0
    nodes_pruned: int = 0
    evaluations: int = 0
    relaxed: bool = False

    @property
    def gap(self) -> float:
        return self.UB - self.LB


def _check_node(node: SupportBounds, n: int, p: int):
    if len(node.l) != n:
        raise ValueError("node dimension does not match Q")
    if node.n_fixed_in > p or node.n_allowed < p:
        raise ValueError("node violates the sparsity bounds")


def upper_bound(Q, p: int, previous: Sequence[SparseComponent], node: SupportBounds) -> float:
    """Upper bound on ``x^T Q x`` over the node's feasible set.

    Uses ``lambda_max(P Q_U P)`` on the allowed coordinates U (or on ``l`` once
    it already holds p indices): every feasible x is supported inside U and is
    orthogonal to the restricted previous components.
    """
    Q = as_sym(Q)
    _check_node(node, Q.n, p)
    x = _previous_matrix(previous, Q.n)
    return _upper(np.asarray(Q), x, node, p)


def _upper(a, x, node, p):
    ones = node.l if node.n_fixed_in == p else node.u
    idx = [j for j, b in enumerate(ones) if b]
    q_u = a[np.ix_(idx, idx)]
    v = x[:, idx]
    basis = orthonormalize(v) if v.shape[0] else np.zeros((0, len(idx)))
    if basis.shape[0] == 0:
        return _top_eigpair(q_u)[0]
    if basis.shape[0] == len(idx):
        return 0.0
    proj = np.eye(len(idx)) - basis.T @ basis
    return _top_eigpair(proj @ q_u @ proj)[0]


def _heuristic_support(a, node, p):
    fixed = [j for j, b in enumerate(node.l) if b]
    free = sorted(node.free(), key=lambda j: (-a[j, j], j))
    return tuple(sorted(fixed + free[: p - len(fixed)]))


def lower_bound(Q, p: int, previous: Sequence[SparseComponent], node: SupportBounds):
    """Feasible witness for the node and its variance.

    Determined supports are solved exactly.  Otherwise the support is ``l``
    topped up with the free coordinates of largest diagonal, and the top
    eigenvector of ``Q_Y`` is projected away from the restricted previous
    components.  Returns ``(-inf, None)`` when that projection vanishes.
    """
    Q = as_sym(Q)
    _check_node(node, Q.n, p)
    x = _previous_matrix(previous, Q.n)
    return _lower(np.asarray(Q), x, node, p)


def _lower(a, x, node, p):
    n = a.shape[0]
    det = node.determined_support(p)
    if det is not None:
        idx = list(det)
        res = _reduced(a[np.ix_(idx, idx)], x[:, idx])
        if not res.feasible:
            return -np.inf, None
        var = float(res.z @ a[np.ix_(idx, idx)] @ res.z)
        return var, SparseComponent(IndexSet(det, n), res.z, var)
    y = _heuristic_support(a, node, p)
    idx = list(y)
    q_y = a[np.ix_(idx, idx)]
    _, w = _top_eigpair(q_y)
    v = x[:, idx]
    basis = orthonormalize(v) if v.shape[0] else np.zeros((0, len(idx)))
    w = w - basis.T @ (basis @ w)
    norm = np.linalg.norm(w)
    if norm <= PROJ_TOL:
        return -np.inf, None
    z = w / norm
    z -= basis.T @ (basis @ z)
    z /= np.linalg.norm(z)
    var = float(z @ q_y @ z)
    return var, SparseComponent(IndexSet(y, n), z, var)


def _root_bound(a, x):
    # lambda_max((I - X X^T) Q (I - X X^T)) over the whole space
    n = a.shape[0]
    if x.shape[0] == 0:
        return _top_eigpair(a)[0]
    basis = orthonormalize(x)
    proj = np.eye(n) - basis.T @ basis
    return _top_eigpair(proj @ a @ proj)[0]


def solve_kth_bnb(Q, p: int, previous: Sequence[SparseComponent] = (), eps: float = 0.0):
    """Eps-optimal k-th component; returns ``(component, certificate)``."""
    Q = as_sym(Q)
    n = Q.n
    if not 1 <= p <= n:
        raise ValueError(f"sparsity p={p} must satisfy 1 <= p <= {n}")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    a = np.asarray(Q)
    x = _previous_matrix(previous, n)

    cert = BnbCertificate(LB=-np.inf, UB=_root_bound(a, x), eps=eps)
    incumbent = None
    counter = itertools.count()
    root = SupportBounds.root(n)
    # heap of (-ub, age, node): best-first, oldest first on ties
    heap = [(-cert.UB, next(counter), root)]

    while cert.UB - cert.LB > eps:
        # drop nodes pruned by the incumbent since they were pushed
        while heap and -heap[0][0] <= cert.LB:
            heapq.heappop(heap)
            cert.nodes_pruned += 1
        if not heap:
            cert.UB = cert.LB
            break
        _, _, node = heapq.heappop(heap)
        cert.nodes_explored += 1
        free = node.free()
        i = max(free, key=lambda j: (a[j, j], -j))
        for val in (0, 1):
            child = node.child(i, val)
            if child.n_fixed_in > p or child.n_allowed < p:
                cert.nodes_pruned += 1
                continue
            lb, witness = _lower(a, x, child, p)
            cert.evaluations += 1
            if child.determined_support(p) is not None:
                ub = lb
            else:
                ub = _upper(a, x, child, p)
            if lb > cert.LB + INCUMBENT_TOL:
                cert.LB = lb
                incumbent = witness
            if ub > cert.LB and child.determined_support(p) is None:
                heapq.heappush(heap, (-ub, next(counter), SupportBounds(child.l, child.u, ub)))
            else:
                cert.nodes_pruned += 1
        while heap and -heap[0][0] <= cert.LB:
            heapq.heappop(heap)
            cert.nodes_pruned += 1
        if not heap:
            # search space exhausted: the incumbent is optimal
            cert.UB = cert.LB
            break
        cert.UB = -heap[0][0]

    if incumbent is None:
        comp = dense_fallback(Q, previous, cert.evaluations)
        cert.relaxed = True
        cert.LB = cert.UB = comp.variance
        return comp, cert
    comp = SparseComponent(incumbent.support, incumbent.values, incumbent.variance,
                           False, cert.evaluations)
    return comp, cert


def iter_bnb(Q, p: int, K: int, eps: float = 0.0, prefix: Sequence[SparseComponent] = ()) -> Iterator:
    """Yield ``(component, certificate)`` for steps ``len(prefix)+1 .. K``."""
    Q = as_sym(Q)
    found = list(prefix)
    while len(found) < K:
        comp, cert = solve_kth_bnb(Q, p, found, eps)
        found.append(comp)
        yield comp, cert


@dataclass
class BnbSolution(SpcaSolution):
    certificates: list = field(default_factory=list)


def solve_sequence_bnb(Q, p: int, K: int, eps: float = 0.0) -> BnbSolution:
    Q = as_sym(Q)
    if not 1 <= K <= Q.n:
        raise ValueError(f"K={K} must satisfy 1 <= K <= {Q.n}")
    comps, certs = [], []
    for comp, cert in iter_bnb(Q, p, K, eps):
        comps.append(comp)
        certs.append(cert)
    return BnbSolution(comps, Q.fingerprint(), p, "bnb", eps, 0.0, Q.n, certs)
