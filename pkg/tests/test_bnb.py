import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthospca.bnb import (
    SupportBounds, lower_bound, solve_kth_bnb, solve_sequence_bnb, upper_bound,
)
from orthospca.certify import exhaustive_optimum
from orthospca.exact import SparseComponent, solve_sequence
from orthospca.linalg import IndexSet
from orthospca.synthetic import random_psd


def node_optimum(Q, p, X, node):
    """Best value over supports inside the node, by enumeration with numpy."""
    n = Q.shape[0]
    best = -np.inf
    for y in itertools.combinations(range(n), p):
        if any(node.l[j] and j not in y for j in range(n)) or any(not node.u[j] for j in y):
            continue
        idx = list(y)
        q_y = Q[np.ix_(idx, idx)]
        if X.shape[0]:
            _, s, vt = np.linalg.svd(X[:, idx])
            null = vt[int(np.sum(s > 1e-10)):].T
            if null.shape[1] == 0:
                continue
            q_y = null.T @ q_y @ null
        best = max(best, np.linalg.eigvalsh(q_y)[-1])
    return best


@st.composite
def bnb_case(draw):
    n = draw(st.integers(2, 7))
    p = draw(st.integers(1, n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    Q = random_psd(n, rng) if draw(st.booleans()) else (lambda g: g + g.T)(rng.normal(size=(n, n)))
    k = draw(st.integers(0, n - 1))
    prefix = [c for c in solve_sequence(Q, p, max(k, 1)).components][:k]
    # random node consistent with the sparsity level
    order = rng.permutation(n)
    n_in = draw(st.integers(0, p))
    n_out = draw(st.integers(0, n - p))
    l = np.zeros(n, dtype=int)
    u = np.ones(n, dtype=int)
    l[order[:n_in]] = 1
    u[order[n_in:n_in + n_out]] = 0
    return Q, p, prefix, SupportBounds(tuple(l), tuple(u))


@settings(max_examples=200, deadline=None)
@given(bnb_case())
def test_bounds_are_sound(case):
    Q, p, prefix, node = case
    X = np.array([c.vector() for c in prefix]).reshape(-1, Q.shape[0])
    opt = node_optimum(Q, p, X, node)
    ub = upper_bound(Q, p, prefix, node)
    lb, witness = lower_bound(Q, p, prefix, node)
    scale = max(1.0, np.abs(Q).max())
    if np.isfinite(opt):
        assert opt <= ub + 1e-9 * scale
    assert lb <= opt + 1e-9 * scale
    if witness is not None:
        x = witness.vector()
        assert np.linalg.norm(x) == pytest.approx(1)
        assert np.allclose(X @ x, 0, atol=1e-9)
        assert all(node.l[j] <= (j in witness.support) <= node.u[j] for j in range(Q.shape[0]))
        assert x @ Q @ x == pytest.approx(lb, abs=1e-9 * scale)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1), st.data())
def test_eps_zero_matches_exact(n, seed, data):
    rng = np.random.default_rng(seed)
    Q = random_psd(n, rng)
    p = data.draw(st.integers(1, min(n, 3)))
    bnb = solve_sequence_bnb(Q, p, n, 0.0)
    ex = solve_sequence(Q, p, n)
    assert np.allclose(bnb.variances, ex.variances, atol=1e-9 * max(1, np.trace(Q)))


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 7), st.integers(0, 2**32 - 1), st.sampled_from([0.01, 0.1, 1.0]))
def test_eps_certificate_is_honest(n, seed, eps):
    rng = np.random.default_rng(seed)
    Q = random_psd(n, rng)
    p = 2
    sol = solve_sequence_bnb(Q, p, n, eps)
    X = sol.vectors()
    for k, (c, cert) in enumerate(zip(sol.components, sol.certificates)):
        assert cert.gap <= eps + 1e-12
        opt = exhaustive_optimum(Q, p, X[:k])
        assert opt <= cert.UB + 1e-9
        if not c.sparsity_relaxed:
            assert c.variance == pytest.approx(cert.LB)
            assert opt - c.variance <= eps + 1e-9


def test_path_fixture(path_matrix):
    comp, cert = solve_kth_bnb(path_matrix, 2)
    assert comp.variance == pytest.approx(6)
    assert cert.LB == pytest.approx(6) and cert.UB == pytest.approx(6)
    assert cert.nodes_explored >= 1


def test_pruning_saves_work(rng):
    Q = random_psd(12, rng)
    Q[:3, :3] += 20 * np.ones((3, 3))
    _, cert = solve_kth_bnb(Q, 3)
    assert cert.evaluations < 220


def test_fallback_when_no_sparse_vector():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    prev = [SparseComponent(IndexSet((0, 1), 2), np.array([1.0, 1.0]) / np.sqrt(2), 0.0)]
    comp, cert = solve_kth_bnb(Q, 1, prev)
    assert comp.sparsity_relaxed and cert.relaxed
    assert cert.gap == 0


def test_support_bounds():
    root = SupportBounds.root(4)
    assert root.free() == [0, 1, 2, 3]
    c = root.child(2, 1).child(0, 0)
    assert c.l == (0, 0, 1, 0) and c.u == (0, 1, 1, 1)
    assert c.determined_support(1) == (2,)
    assert c.determined_support(3) == (1, 2, 3)
    assert c.determined_support(2) is None
    with pytest.raises(ValueError):
        SupportBounds((1, 0), (0, 1))
    with pytest.raises(ValueError):
        upper_bound(np.eye(4), 2, [], SupportBounds((1, 1, 1, 0), (1, 1, 1, 1)))


def test_rejects_negative_eps(path_matrix):
    with pytest.raises(ValueError):
        solve_kth_bnb(path_matrix, 2, eps=-0.1)
