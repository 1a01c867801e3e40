"""Synthetic covariance matrices with planted block structure."""

from __future__ import annotations

import numpy as np


def block_covariance(n: int, d: int, block_size: int, coupling: float = 1.0,
                     noise: float = 0.0, seed: int = 0) -> np.ndarray:
    """PSD matrix made of ``d`` random PSD blocks plus small off-block noise.

    Each block is ``diag(s) + coupling * G^T G / block_size`` with Gaussian G;
    off-block entries are uniform on ``[-noise, noise]``.  The diagonal is
    raised by ``(n - block_size) * noise`` so the noisy matrix stays PSD.
    """
    if d < 1 or block_size < 1 or n != d * block_size:
        raise ValueError(f"need n == d * block_size with d, block_size >= 1 (n={n}, d={d}, "
                         f"block_size={block_size})")
    if coupling < 0 or noise < 0:
        raise ValueError("coupling and noise must be non-negative")
    rng = np.random.default_rng(seed)
    a = np.zeros((n, n))
    for b in range(d):
        g = rng.standard_normal((block_size, block_size))
        blk = np.diag(rng.uniform(0.5, 1.5, block_size)) + coupling * (g.T @ g) / block_size
        sl = slice(b * block_size, (b + 1) * block_size)
        a[sl, sl] = blk
    if noise > 0:
        e = np.triu(rng.uniform(-noise, noise, (n, n)), 1)
        e = e + e.T
        inside = np.kron(np.eye(d), np.ones((block_size, block_size))) > 0
        e[inside] = 0.0
        a += e + (n - block_size) * noise * np.eye(n)
    return 0.5 * (a + a.T)


def random_psd(n: int, rng: np.random.Generator, rank: int = None) -> np.ndarray:
    g = rng.standard_normal((rank or n, n))
    return g.T @ g
