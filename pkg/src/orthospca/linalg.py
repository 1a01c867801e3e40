"""Dense symmetric linear algebra used by the solvers.

Everything here is small and self-contained: a cyclic Jacobi eigensolver,
Gram-Schmidt with re-orthogonalization, complement projectors, and the
restriction / zero-padding maps between R^n and a coordinate subset.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
GS_TOL = 1e-10
SYMMETRY_RTOL = 1e-9
SMALL_N = 10


class AsymmetricMatrixError(ValueError):
    """Raised when an input matrix is too far from symmetric to be repaired."""

    def __init__(self, message, i, j, gap):
        super().__init__(message)
        self.i = i
        self.j = j
        self.gap = gap


class SymMatrix:
    """Immutable dense symmetric matrix.

    Input is symmetrized as ``(M + M.T) / 2`` when its asymmetry is within
    ``1e-9 * max|M_ij|``; anything worse raises :class:`AsymmetricMatrixError`.
    Positive semi-definiteness is not required.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        if isinstance(entries, SymMatrix):
            self._a = entries._a
            return
        a = np.array(entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"matrix must be square, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("matrix must have dimension >= 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix contains non-finite entries")
        gap = np.abs(a - a.T)
        worst = float(gap.max())
        scale = float(np.abs(a).max())
        if worst > SYMMETRY_RTOL * scale:
            i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
            raise AsymmetricMatrixError(
                f"matrix is not symmetric: |M[{i},{j}] - M[{j},{i}]| = {worst:.3g}",
                int(i), int(j), worst,
            )
        if worst > 0.0:
            a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self._a = a

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "SymMatrix":
        obj = cls.__new__(cls)
        a = np.array(a, dtype=float)
        a.setflags(write=False)
        obj._a = a
        return obj

    @property
    def n(self) -> int:
        return self._a.shape[0]

    @property
    def entries(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self._a

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a
        return self._a.astype(dtype)

    def trace(self) -> float:
        return float(np.trace(self._a))

    def submatrix(self, idx) -> "SymMatrix":
        idx = np.asarray(list(idx), dtype=int)
        return SymMatrix._trusted(self._a[np.ix_(idx, idx)])

    def fingerprint(self) -> str:
        digest = hashlib.sha256(np.ascontiguousarray(self._a).tobytes()).hexdigest()
        return f"{self.n}:{digest[:16]}"

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return self._a.shape == other._a.shape and bool(np.array_equal(self._a, other._a))

    def __hash__(self):
        return hash(self.fingerprint())

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def as_sym(m) -> SymMatrix:
    return m if isinstance(m, SymMatrix) else SymMatrix(m)


@dataclass(frozen=True)
class IndexSet:
    """Strictly increasing coordinate indices inside ``range(parent_dim)``."""

    indices: tuple
    parent_dim: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.parent_dim):
            raise ValueError(f"indices {idx} out of range for dimension {self.parent_dim}")

    @classmethod
    def of(cls, indices: Iterable[int], parent_dim: int) -> "IndexSet":
        return cls(tuple(sorted(set(int(i) for i in indices))), parent_dim)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, j):
        return j in self.indices

    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int)


@dataclass(frozen=True)
class OrthonormalBasis:
    """Ordered orthonormal vectors, stored as the rows of ``vectors``."""

    ambient_dim: int
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            v = v.reshape(-1, self.ambient_dim)
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        if v.shape[0] > self.ambient_dim:
            raise ValueError("more basis vectors than ambient dimension")
        gram = v @ v.T
        if gram.size and np.abs(gram - np.eye(v.shape[0])).max() > 1e-10:
            raise ValueError("vectors are not orthonormal")

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """The ``ambient_dim x m`` matrix U with the basis as columns."""
        return self.vectors.T


# -- eigensolver -----------------------------------------------------------


def jacobi_eigh(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Full eigendecomposition of a symmetric array by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops to
    ``tol * ||a||_F``.  Returns ``(eigenvalues, V)`` with eigenvectors in the
    columns of V, unsorted (in the order the rotations leave them).
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy(), np.eye(1)
    if n == 2:
        return _rotate_2x2(a)
    if n <= SMALL_N:
        w, v = _jacobi_scalar(a.tolist(), n, tol, max_sweeps)
        return np.array(w), np.array(v)
    return _jacobi_numpy(a, n, tol, max_sweeps)


def _jacobi_scalar(a, n, tol, max_sweeps):
    # plain-float loops beat numpy call overhead for small n
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    threshold = tol * math.sqrt(sum(x * x for row in a for x in row))
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * sum(a[p][q] ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                c, s = _schur2(a[p][p], a[q][q], apq)
                for row in a:
                    x, y = row[p], row[q]
                    row[p] = c * x - s * y
                    row[q] = s * x + c * y
                rp, rq = a[p], a[q]
                for k in range(n):
                    x, y = rp[k], rq[k]
                    rp[k] = c * x - s * y
                    rq[k] = s * x + c * y
                a[p][q] = a[q][p] = 0.0
                for row in v:
                    x, y = row[p], row[q]
                    row[p] = c * x - s * y
                    row[q] = s * x + c * y
    return [a[i][i] for i in range(n)], v


def _jacobi_numpy(a, n, tol, max_sweeps):
    v = np.eye(n)
    threshold = tol * np.sqrt(np.sum(a * a))
    iu = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(a[iu] ** 2))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                c, s = _schur2(a[p, p], a[q, q], apq)
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :]
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return a.diagonal().copy(), v


def _schur2(app, aqq, apq):
    # rotation (c, s) annihilating apq in the 2x2 symmetric block
    h = aqq - app
    if abs(h) + 100.0 * abs(apq) == abs(h):
        # tiny apq: small-angle limit, avoids overflowing tau
        t = apq / h
    else:
        tau = h / (2.0 * apq)
        t = 1.0 / (abs(tau) + math.hypot(1.0, tau))
        if tau < 0.0:
            t = -t
    c = 1.0 / math.sqrt(1.0 + t * t)
    return c, t * c


def _rotate_2x2(a):
    app, aqq, apq = float(a[0, 0]), float(a[1, 1]), float(a[0, 1])
    if apq == 0.0:
        return np.array([app, aqq]), np.eye(2)
    c, s = _schur2(app, aqq, apq)
    t = s / c
    w = np.array([app - t * apq, aqq + t * apq])
    v = np.array([[c, s], [-s, c]])
    return w, v


def _top_eigpair(a: np.ndarray):
    w, v = jacobi_eigh(a)
    n = w.shape[0]
    lam = w.max()
    # lowest column among (numerically) tied top eigenvalues
    slack = 1e-12 * max(1.0, abs(lam))
    k = int(np.flatnonzero(w >= lam - slack)[0]) if n > 1 else 0
    vec = v[:, k]
    vec = vec / np.linalg.norm(vec)
    return float(w[k]), _fix_sign(vec)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    mags = np.abs(vec)
    top = mags.max()
    j = int(np.flatnonzero(mags >= top - 1e-12 * top)[0])
    return -vec if vec[j] < 0 else vec


def sym_eig_max(m):
    """Largest eigenvalue of a symmetric matrix and a unit eigenvector.

    The eigenvector is signed so its entry of largest magnitude is positive
    (lowest index on ties).
    """
    a = np.asarray(as_sym(m))
    return _top_eigpair(a)


# -- orthogonalization ------------------------------------------------------


def orthonormalize(vectors: np.ndarray, tol: float = GS_TOL) -> np.ndarray:
    """Classical Gram-Schmidt with one re-orthogonalization pass (CGS2).

    ``vectors`` holds one input vector per row. Rows whose residual falls
    below ``tol`` are dropped. Returns the accepted basis as rows.
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        dim = vectors.shape[-1] if vectors.ndim == 2 else 0
        return np.zeros((0, dim))
    dim = vectors.shape[1]
    basis = np.empty((min(vectors.shape[0], dim), dim))
    m = 0
    for w in vectors:
        w = w.copy()
        if m:
            b = basis[:m]
            w -= b.T @ (b @ w)
            w -= b.T @ (b @ w)
        norm = np.sqrt(w @ w)
        if norm < tol:
            continue
        basis[m] = w / norm
        m += 1
        if m == dim:
            break
    return basis[:m].copy()


def gram_schmidt(vectors: Sequence, tol: float = GS_TOL) -> OrthonormalBasis:
    if tol <= 0:
        raise ValueError("tol must be positive")
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    if not vectors:
        return OrthonormalBasis(0, np.zeros((0, 0)))
    dims = {v.shape for v in vectors}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise ValueError("all vectors must share one ambient dimension")
    stacked = np.vstack(vectors)
    return OrthonormalBasis(stacked.shape[1], orthonormalize(stacked, tol))


def complete_basis(basis: np.ndarray, dim: int, tol: float = GS_TOL) -> np.ndarray:
    """Rows of an orthonormal basis for the orthogonal complement of ``basis``.

    Built by running Gram-Schmidt over ``basis`` followed by the standard
    basis vectors and keeping only the new directions.
    """
    basis = np.asarray(basis, dtype=float).reshape(-1, dim)
    full = orthonormalize(np.vstack([basis, np.eye(dim)]), tol)
    return full[basis.shape[0]:]


def complement_projector(basis: OrthonormalBasis) -> SymMatrix:
    """``I - U U^T`` for the basis U."""
    dim = basis.ambient_dim
    u = basis.matrix
    p = np.eye(dim) - u @ u.T
    return SymMatrix._trusted(0.5 * (p + p.T))


# -- restriction / zero-padding ---------------------------------------------


def restrict(v, y: IndexSet) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (y.parent_dim,):
        raise ValueError(f"vector of length {v.shape} does not live in R^{y.parent_dim}")
    return v[y.array()]


def embed(w, y: IndexSet) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (len(y),):
        raise ValueError(f"expected {len(y)} values, got shape {w.shape}")
    out = np.zeros(y.parent_dim)
    out[y.array()] = w
    return out
