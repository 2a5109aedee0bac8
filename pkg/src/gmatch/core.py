"""Core matrix types, graph-matching objectives, and accuracy metrics.

Graphs are simple and undirected, stored as dense symmetric hollow 0/1
matrices (float64 for BLAS-friendly products). Permutations are index
arrays ``sigma`` with ``sigma[i]`` the image of vertex ``i``; the matrix
form has a one at ``(i, sigma[i])``. Doubly stochastic matrices are dense
nonnegative arrays with unit row and column sums.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "accuracy",
    "as_adjacency",
    "edit_disagreements",
    "gm_edit_objective",
    "is_permutation_matrix",
    "load_edgelist",
    "loss",
    "matrix_to_perm",
    "perm_to_matrix",
    "save_edgelist",
    "trace_objective",
    "validate_doubly_stochastic",
    "require_doubly_stochastic",
]

DS_TOL = 1e-9


def as_adjacency(A) -> np.ndarray:
    """Validate and return a dense adjacency matrix (symmetric, hollow, 0/1)."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"adjacency matrix must be square, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        raise ValueError("adjacency matrix must be symmetric")
    if np.diagonal(A).any():
        raise ValueError("adjacency matrix must be hollow (no self-loops)")
    if not np.isin(A, (0.0, 1.0)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    return A


def perm_to_matrix(sigma) -> np.ndarray:
    """Return the permutation matrix ``P`` with ``P[i, sigma[i]] = 1``."""
    sigma = _as_sigma(sigma)
    n = sigma.size
    P = np.zeros((n, n))
    P[np.arange(n), sigma] = 1.0
    return P


def matrix_to_perm(P) -> np.ndarray:
    """Recover the index array ``sigma`` from a permutation matrix."""
    P = np.asarray(P)
    if not is_permutation_matrix(P):
        raise ValueError("not a permutation matrix")
    return np.argmax(P, axis=1)


def is_permutation_matrix(M) -> bool:
    """True iff ``M`` is exactly a 0/1 matrix with one 1 per row and column."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    if not np.isin(M, (0.0, 1.0)).all():
        return False
    return bool((M.sum(axis=0) == 1).all() and (M.sum(axis=1) == 1).all())


def _as_sigma(p) -> np.ndarray:
    """Accept a permutation as an index array or a matrix; return the index array."""
    p = np.asarray(p)
    if p.ndim == 2:
        return matrix_to_perm(p)
    sigma = p.astype(np.intp)
    n = sigma.size
    if not np.array_equal(np.sort(sigma), np.arange(n)):
        raise ValueError("sigma is not a bijection on [n]")
    return sigma


def edit_disagreements(A, B, P) -> int:
    """Exact count of entries where ``A`` and ``P B P^T`` differ.

    Equals twice the number of unordered vertex pairs on which the two
    graphs disagree under the permutation, and equals ``||A - PBP^T||_F^2``
    for 0/1 matrices.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    sigma = _as_sigma(P)
    if A.shape != B.shape or A.shape[0] != sigma.size:
        raise ValueError("dimension mismatch between A, B, and P")
    B_perm = B[np.ix_(sigma, sigma)]
    return int(np.count_nonzero(A != B_perm))


def gm_edit_objective(A, B, P) -> float:
    """Graph-matching edit objective ``||A - PBP^T||_F^2``."""
    return float(edit_disagreements(A, B, P))


def trace_objective(A, B, D) -> float:
    """Relaxed objective ``trace(A D B D^T)``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if not (A.shape == B.shape == D.shape) or A.shape[0] != A.shape[1]:
        raise ValueError("A, B, D must be square matrices of equal size")
    return float(((A @ D @ B) * D).sum())


def accuracy(M) -> float:
    """Matching accuracy ``trace(M)/n`` (truth = identity by convention)."""
    M = np.asarray(M)
    if M.ndim == 1:
        sigma = _as_sigma(M)
        return float(np.count_nonzero(sigma == np.arange(sigma.size)) / sigma.size)
    if M.shape[0] != M.shape[1]:
        raise ValueError("accuracy requires a square matrix")
    return float(np.trace(M) / M.shape[0])


def loss(D) -> float:
    """Misplaced-mass loss ``n - trace(D)``."""
    D = np.asarray(D)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("loss requires a square matrix")
    return float(D.shape[0] - np.trace(D))


def validate_doubly_stochastic(M, tol: float = DS_TOL) -> bool:
    """True iff entries are >= -tol and all row/column sums are within tol of 1."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    if (M < -tol).any():
        return False
    if np.abs(M.sum(axis=0) - 1.0).max() > tol:
        return False
    return bool(np.abs(M.sum(axis=1) - 1.0).max() <= tol)


def require_doubly_stochastic(M, tol: float = 1e-8) -> np.ndarray:
    """Return ``M`` as float64, raising if it is not doubly stochastic."""
    M = np.asarray(M, dtype=np.float64)
    if not validate_doubly_stochastic(M, tol):
        raise ValueError("matrix is not doubly stochastic within tolerance")
    return M


def load_edgelist(path, n: int | None = None) -> np.ndarray:
    """Load an undirected graph from an edge-list text file.

    Format: one ``u v`` pair per line, 0-indexed. Blank lines and lines
    starting with ``#`` are ignored. Self-loops are rejected; edges are
    symmetrized. ``n`` defaults to one more than the largest index seen.
    """
    edges = []
    max_idx = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            u, v = int(parts[0]), int(parts[1])
            if u == v:
                raise ValueError(f"{path}:{lineno}: self-loop {u} rejected")
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: negative vertex index")
            edges.append((u, v))
            max_idx = max(max_idx, u, v)
    if n is None:
        n = max_idx + 1
    elif max_idx >= n:
        raise ValueError(f"edge index {max_idx} out of range for n={n}")
    A = np.zeros((n, n))
    for u, v in edges:
        A[u, v] = 1.0
        A[v, u] = 1.0
    return A


def save_edgelist(A, path) -> None:
    """Write the upper triangle of an adjacency matrix as 'u v' lines."""
    A = as_adjacency(A)
    iu, iv = np.nonzero(np.triu(A, 1))
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in zip(iu.tolist(), iv.tolist()):
            fh.write(f"{u} {v}\n")
