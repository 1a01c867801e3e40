"""Orthogonal sparse PCA: exact enumeration, branch-and-bound, and threshold
block decomposition, with numerical certificates."""

__version__ = "0.1.0"

from .blocks import (
    BlockStructure, block_diagonalize, iter_threshold, merge_sorted, predicted_cost,
    threshold_matrix, threshold_spca,
)
from .bnb import BnbCertificate, SupportBounds, iter_bnb, solve_kth_bnb, solve_sequence_bnb
from .certify import (
    CertificateReport, OracleCapExceeded, check_eps_certificate, check_solution,
    deflation_baseline, exhaustive_optimum, max_pairwise_angle_deviation,
)
from .exact import (
    SparseComponent, SpcaSolution, iter_exact, reduced_pca_on_support, solve_kth_exact,
    solve_sequence,
)
from .io import load_matrix, parse_matrix
from .linalg import (
    AsymmetricMatrixError, IndexSet, OrthonormalBasis, SymMatrix, gram_schmidt, jacobi_eigh,
    sym_eig_max,
)

__all__ = [
    "AsymmetricMatrixError", "BlockStructure", "BnbCertificate", "CertificateReport",
    "IndexSet", "OracleCapExceeded", "OrthonormalBasis", "SparseComponent", "SpcaSolution",
    "SupportBounds", "SymMatrix", "block_diagonalize", "check_eps_certificate",
    "check_solution", "deflation_baseline", "exhaustive_optimum", "gram_schmidt",
    "iter_bnb", "iter_exact", "iter_threshold", "jacobi_eigh", "load_matrix",
    "max_pairwise_angle_deviation", "merge_sorted", "parse_matrix", "predicted_cost",
    "reduced_pca_on_support", "solve_kth_bnb", "solve_kth_exact", "solve_sequence",
    "solve_sequence_bnb", "sym_eig_max", "threshold_matrix", "threshold_spca",
]
