"""Doubly stochastic initializations from seeds, partitions, similarity, and randomness.

Also hosts the partition machinery (confusion matrices, disagreement, and
controlled-disagreement sampling) used by the block-alignment experiments.
Partitions are sequences of disjoint index collections covering ``range(n)``.
"""

from __future__ import annotations

import csv

import numpy as np

from .core import validate_doubly_stochastic
from .lap import lap_value, solve_lap_max

__all__ = [
    "ConvergenceError",
    "barycenter",
    "block_diag_barycenter",
    "blocks_partition",
    "confusion_matrix",
    "convex_combination",
    "disagreement",
    "load_features_csv",
    "load_similarity_csv",
    "project_frobenius_to_ds",
    "random_doubly_stochastic",
    "random_permutation",
    "sample_partition_with_confusion",
    "similarity_from_features",
    "sinkhorn_knopp",
    "soft_seed_one_to_one",
    "soft_seed_partition",
]


class ConvergenceError(RuntimeError):
    """An iterative balancer failed to reach its tolerance within its cap."""


def barycenter(n: int) -> np.ndarray:
    """The constant matrix J/n, center of the Birkhoff polytope (trace 1)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return np.full((n, n), 1.0 / n)


def soft_seed_one_to_one(n: int, seeds) -> np.ndarray:
    """Initialization from a one-to-one partial correspondence.

    Puts a 1 at every seed pair, zeroes the rest of seeded rows and
    columns, and fills the unseeded block with its own barycenter
    ``1/(n - |seeds|)``.
    """
    pairs = [(int(i), int(j)) for i, j in seeds]
    rows = [i for i, _ in pairs]
    cols = [j for _, j in pairs]
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise ValueError("seed pairs must be one-to-one (no repeated row or column)")
    if any(i < 0 or i >= n or j < 0 or j >= n for i, j in pairs):
        raise ValueError("seed index out of range")
    D = np.zeros((n, n))
    for i, j in pairs:
        D[i, j] = 1.0
    free_rows = np.setdiff1d(np.arange(n), rows)
    free_cols = np.setdiff1d(np.arange(n), cols)
    if free_rows.size:
        D[np.ix_(free_rows, free_cols)] = 1.0 / free_rows.size
    return D


def _check_partition(parts, n: int) -> list[np.ndarray]:
    parts = [np.asarray(sorted(int(i) for i in part), dtype=np.intp) for part in parts]
    flat = np.concatenate(parts) if parts else np.array([], dtype=np.intp)
    if not np.array_equal(np.sort(flat), np.arange(n)):
        raise ValueError("parts must be disjoint and cover range(n)")
    return parts


def soft_seed_partition(eta, zeta) -> np.ndarray:
    """Block-barycenter initialization from a matched pair of partitions.

    Rows in ``eta[k]`` are believed to correspond to columns in
    ``zeta[k]``; each such block becomes its own barycenter. If the
    partitions agree part by part the trace equals the number of parts.
    """
    sizes_eta = [len(p) for p in eta]
    sizes_zeta = [len(p) for p in zeta]
    if sizes_eta != sizes_zeta:
        raise ValueError("matched parts must have equal cardinalities")
    n = sum(sizes_eta)
    eta = _check_partition(eta, n)
    zeta = _check_partition(zeta, n)
    D = np.zeros((n, n))
    for e, z in zip(eta, zeta):
        D[np.ix_(e, z)] = 1.0 / e.size
    return D


def block_diag_barycenter(n: int, s: int) -> np.ndarray:
    """Block-diagonal initialization with s barycenter blocks (trace s).

    If s divides n the blocks all have size n/s; otherwise the first s-1
    blocks have size floor(n/s) and the final block absorbs the rest.
    """
    if not 1 <= s <= n:
        raise ValueError("s must lie in [1, n]")
    base = n // s
    sizes = [base] * (s - 1) + [n - (s - 1) * base]
    D = np.zeros((n, n))
    off = 0
    for b in sizes:
        D[off : off + b, off : off + b] = 1.0 / b
        off += b
    return D


def sinkhorn_knopp(S, tol: float = 1e-8, max_iter: int = 10_000) -> np.ndarray:
    """Balance a nonnegative matrix to doubly stochastic form.

    Alternately normalizes rows then columns until every row and column
    sum is within ``tol`` of 1. Already-balanced input is returned
    unchanged. Raises ConvergenceError when the cap is hit and ValueError
    on a zero row or column.
    """
    S = np.array(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("matrix must be square")
    if (S < 0).any():
        raise ValueError("matrix must be nonnegative")
    if (S.sum(axis=1) == 0).any() or (S.sum(axis=0) == 0).any():
        raise ValueError("matrix has a zero row or column; cannot be balanced")

    def deviation(M):
        return max(np.abs(M.sum(axis=1) - 1.0).max(), np.abs(M.sum(axis=0) - 1.0).max())

    if deviation(S) < tol:
        return S
    for _ in range(max_iter):
        S /= S.sum(axis=1, keepdims=True)
        S /= S.sum(axis=0, keepdims=True)
        if deviation(S) < tol:
            return S
    raise ConvergenceError(f"row/column sums not within {tol} after {max_iter} sweeps")


def _project_row_col_sums(X: np.ndarray) -> np.ndarray:
    """Closed-form projection onto the affine set {row sums = col sums = 1}."""
    n = X.shape[0]
    a = X.sum(axis=1)
    b = X.sum(axis=0)
    total = a.sum()
    shift = (n - total) / (2.0 * n * n)
    u = (1.0 - a) / n - shift
    v = (1.0 - b) / n - shift
    return X + u[:, None] + v[None, :]


def project_frobenius_to_ds(S, tol: float = 1e-9, max_iter: int = 100_000) -> np.ndarray:
    """Frobenius-nearest doubly stochastic matrix, by Dykstra's algorithm.

    Alternates projections between the affine row/column-sum set and the
    nonnegative orthant, with Dykstra correction terms so the limit is the
    true metric projection (plain alternating projection only finds *a*
    feasible point). Stops when successive sweeps differ by less than
    ``tol`` in Frobenius norm.
    """
    X = np.array(S, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("matrix must be square")
    p = np.zeros_like(X)
    q = np.zeros_like(X)
    prev = X.copy()
    for _ in range(max_iter):
        Y = _project_row_col_sums(X + p)
        p = X + p - Y
        X = np.maximum(Y + q, 0.0)
        q = Y + q - X
        feas = max(np.abs(X.sum(axis=1) - 1.0).max(), np.abs(X.sum(axis=0) - 1.0).max())
        if np.linalg.norm(X - prev) < tol and feas < 10.0 * tol:
            return X
        prev = X.copy()
    raise ConvergenceError(f"Dykstra projection did not reach {tol} in {max_iter} sweeps")


def similarity_from_features(X, Y, kernel="gaussian", sigma: float = 1.0) -> np.ndarray:
    """Pairwise similarity matrix ``S[i, j] = kappa(X_i, Y_j)``.

    Built-in kernels: "gaussian" ``exp(-||x - y||^2 / (2 sigma^2))`` and
    "inner" (inner product clipped at 0). ``kernel`` may also be a callable
    on feature-vector pairs.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValueError("feature tables must be 2-D with matching width")
    if callable(kernel):
        S = np.array([[kernel(x, y) for y in Y] for x in X], dtype=np.float64)
    elif kernel == "gaussian":
        sq = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2)
        S = np.exp(-sq / (2.0 * sigma**2))
    elif kernel == "inner":
        S = np.maximum(X @ Y.T, 0.0)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    if (S < 0).any():
        raise ValueError("kernel produced negative similarities")
    return S


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random permutation of range(n)."""
    return rng.permutation(n)


def random_doubly_stochastic(n: int, method: str, rng: np.random.Generator, k: int = 3) -> np.ndarray:
    """Sample a random doubly stochastic matrix.

    Methods: "permutation" (a uniform random permutation matrix),
    "sinkhorn-of-uniform" (balance an iid Uniform(0,1) matrix), and
    "convex-mix" (Dirichlet-weighted mixture of k random permutations).
    """
    if method == "permutation":
        P = np.zeros((n, n))
        P[np.arange(n), random_permutation(n, rng)] = 1.0
        return P
    if method == "sinkhorn-of-uniform":
        return sinkhorn_knopp(rng.random((n, n)))
    if method == "convex-mix":
        if k < 1:
            raise ValueError("convex-mix requires k >= 1")
        weights = rng.dirichlet(np.ones(k))
        D = np.zeros((n, n))
        for w in weights:
            D[np.arange(n), random_permutation(n, rng)] += w
        return D
    raise ValueError(f"unknown method {method!r}")


def convex_combination(weights, matrices) -> np.ndarray:
    """Weighted average of doubly stochastic matrices (still doubly stochastic)."""
    weights = np.asarray(weights, dtype=np.float64)
    matrices = [np.asarray(M, dtype=np.float64) for M in matrices]
    if weights.ndim != 1 or weights.size != len(matrices):
        raise ValueError("need one weight per matrix")
    if (weights < 0).any() or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be nonnegative and sum to 1")
    if not matrices:
        raise ValueError("need at least one matrix")
    shape = matrices[0].shape
    out = np.zeros(shape)
    for w, M in zip(weights, matrices):
        if M.shape != shape:
            raise ValueError("matrices must share a common shape")
        if not validate_doubly_stochastic(M, 1e-8):
            raise ValueError("all matrices must be doubly stochastic")
        out += w * M
    return out


def blocks_partition(block_sizes) -> list[np.ndarray]:
    """Contiguous partition of range(sum(sizes)) into the given block sizes."""
    parts = []
    off = 0
    for b in block_sizes:
        parts.append(np.arange(off, off + int(b)))
        off += int(b)
    return parts


def confusion_matrix(eta, beta) -> np.ndarray:
    """Part-overlap counts ``C[i, j] = |eta_i intersect beta_j|``."""
    if len(eta) != len(beta):
        raise ValueError("partitions must have the same number of parts")
    n = sum(len(p) for p in eta)
    eta = _check_partition(eta, n)
    beta = _check_partition(beta, n)
    K = len(eta)
    beta_label = np.empty(n, dtype=np.intp)
    for j, part in enumerate(beta):
        beta_label[part] = j
    C = np.zeros((K, K), dtype=np.int64)
    for i, part in enumerate(eta):
        labels, counts = np.unique(beta_label[part], return_counts=True)
        C[i, labels] = counts
    return C


def disagreement(eta, beta) -> int:
    """Partition disagreement: n minus the best relabeled diagonal overlap."""
    C = confusion_matrix(eta, beta)
    n = int(C.sum())
    best = lap_value(C.astype(np.float64), solve_lap_max(C.astype(np.float64)))
    return n - int(round(best))


def sample_partition_with_confusion(n: int, K: int, delta: int, beta, rng: np.random.Generator):
    """Sample a partition with an exact target confusion matrix against ``beta``.

    The target is ``((n - delta)/K) I + (delta/(K(K-1))) (J - I)``: each
    part keeps ``(n - delta)/K`` of its reference vertices and sends an
    equal share of the remaining ``delta/K`` to every other part, with the
    moved vertices chosen uniformly at random. Requires ``K | n``,
    ``K(K-1) | delta`` and ``delta <= n - n/K``.
    """
    if n % K != 0:
        raise ValueError("K must divide n")
    if delta % (K * (K - 1)) != 0:
        raise ValueError("delta must be divisible by K*(K-1)")
    if delta < 0 or delta > n - n // K:
        raise ValueError("delta must lie in [0, n - n/K]")
    beta = _check_partition(beta, n)
    if len(beta) != K or any(p.size != n // K for p in beta):
        raise ValueError("beta must have K parts of equal size n/K")
    stay = (n - delta) // K
    move = delta // (K * (K - 1))
    eta = [[] for _ in range(K)]
    for j in range(K):
        members = beta[j].copy()
        rng.shuffle(members)
        eta[j].extend(members[:stay].tolist())
        pos = stay
        for i in range(K):
            if i == j:
                continue
            eta[i].extend(members[pos : pos + move].tolist())
            pos += move
    return [np.asarray(sorted(part), dtype=np.intp) for part in eta]


def load_features_csv(path) -> np.ndarray:
    """Load a numeric feature table from CSV (header row skipped)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if len(rows) < 2:
        raise ValueError("CSV needs a header row and at least one data row")
    return np.array([[float(cell) for cell in row] for row in rows[1:]], dtype=np.float64)


def load_similarity_csv(path) -> np.ndarray:
    """Load a square similarity matrix from CSV (header row skipped)."""
    S = load_features_csv(path)
    if S.shape[0] != S.shape[1]:
        raise ValueError(f"similarity matrix must be square, got {S.shape}")
    return S
