"""Correlated random-graph pairs: samplers, exact expectations, and theory thresholds.

The model draws a pair of simple graphs with common edge-probability
matrix ``Lambda`` and edgewise correlation matrix ``R``: each unordered
pair ``{u, v}`` is sampled independently, and the two indicator variables
for that pair have correlation ``R[u, v]``. The identity is the true
correspondence by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CorrErParams",
    "ModelSpec",
    "TheoryThresholds",
    "build_params",
    "corr_er_params",
    "covariance_matrix",
    "expected_trace",
    "hom_params",
    "model_from_json",
    "rdpg_params",
    "sample_bivariate_bernoulli",
    "sample_corr_er",
    "sample_dirichlet_positions",
    "sbm_params",
    "theory_thresholds",
]


@dataclass(frozen=True)
class CorrErParams:
    """Edge-probability matrix ``Lambda`` and edge-correlation matrix ``R``.

    ``Lambda`` is hollow (forced on construction): edges exist only for
    ``u < v``, so diagonal probabilities are meaningless and zeroing them
    makes the expectation identities exact. The diagonal of ``R`` is
    likewise zeroed; there are no self-loops to correlate.
    """

    n: int
    Lambda: np.ndarray
    R: np.ndarray


def corr_er_params(Lambda, R) -> CorrErParams:
    """Validate and build model parameters from probability/correlation matrices."""
    Lambda = np.array(Lambda, dtype=np.float64)
    R = np.array(R, dtype=np.float64)
    if Lambda.ndim != 2 or Lambda.shape[0] != Lambda.shape[1]:
        raise ValueError("Lambda must be square")
    if R.shape != Lambda.shape:
        raise ValueError("R must have the same shape as Lambda")
    if not np.allclose(Lambda, Lambda.T):
        raise ValueError("Lambda must be symmetric")
    if not np.allclose(R, R.T):
        raise ValueError("R must be symmetric")
    if Lambda.min() < 0 or Lambda.max() > 1:
        raise ValueError("Lambda entries must lie in [0, 1]")
    if R.min() < 0 or R.max() > 1:
        raise ValueError("R entries must lie in [0, 1]")
    np.fill_diagonal(Lambda, 0.0)
    np.fill_diagonal(R, 0.0)
    Lambda.setflags(write=False)
    R.setflags(write=False)
    return CorrErParams(n=Lambda.shape[0], Lambda=Lambda, R=R)


def hom_params(n: int, p: float, r: float) -> CorrErParams:
    """Homogeneous model: every pair has edge probability p and correlation r."""
    J = np.ones((n, n))
    return corr_er_params(p * J, r * J)


def sbm_params(block_sizes, within_p: float, between_p: float, r: float) -> CorrErParams:
    """Blockmodel marginals: within_p inside a block, between_p across blocks."""
    block_sizes = [int(b) for b in block_sizes]
    if not block_sizes or any(b < 1 for b in block_sizes):
        raise ValueError("block sizes must be positive")
    K = len(block_sizes)
    base = (within_p - between_p) * np.eye(K) + between_p * np.ones((K, K))
    Lambda = np.repeat(np.repeat(base, block_sizes, axis=0), block_sizes, axis=1)
    n = sum(block_sizes)
    return corr_er_params(Lambda, r * np.ones((n, n)))


def rdpg_params(X, r: float) -> CorrErParams:
    """Dot-product marginals: ``Lambda = X X^T`` for latent positions X.

    ``r`` is the common edge correlation. All inner products must lie
    in [0, 1].
    """
    X = np.asarray(X, dtype=np.float64)
    Lambda = X @ X.T
    off = Lambda[~np.eye(Lambda.shape[0], dtype=bool)]
    if off.size and (off.min() < 0 or off.max() > 1):
        raise ValueError("latent-position inner products must lie in [0, 1]")
    np.fill_diagonal(Lambda, 0.0)
    n = Lambda.shape[0]
    return corr_er_params(Lambda, r * np.ones((n, n)))


def sample_dirichlet_positions(n: int, rng: np.random.Generator) -> np.ndarray:
    """First two coordinates of n uniform draws on the 3-simplex."""
    return rng.dirichlet(np.ones(3), size=n)[:, :2]


def covariance_matrix(params: CorrErParams) -> np.ndarray:
    """Edgewise covariance ``S[i, j] = R[i, j] * Lambda[i, j] * (1 - Lambda[i, j])``."""
    return params.R * params.Lambda * (1.0 - params.Lambda)


def sample_bivariate_bernoulli(lam, rho, rng: np.random.Generator, size=None):
    """Draw correlated Bernoulli pairs with marginal ``lam`` and correlation ``rho``.

    Uses the three-independent-coins construction: with
    ``Z0 ~ Bern(lam)``, ``Z1 ~ Bern(lam*(1-rho))`` and
    ``Z2 ~ Bern(lam + rho*(1-lam))`` drawn independently, the pair
    ``(Z0, (1-Z0)*Z1 + Z0*Z2)`` has the required joint law.

    With ``size=None`` returns a scalar pair (ints); otherwise arrays.
    ``lam`` and ``rho`` may be scalars or arrays broadcastable to ``size``.
    """
    lam = np.asarray(lam, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if (lam < 0).any() or (lam > 1).any():
        raise ValueError("lam must lie in [0, 1]")
    if (rho < 0).any() or (rho > 1).any():
        raise ValueError("rho must lie in [0, 1]")
    shape = size if size is not None else np.broadcast(lam, rho).shape
    z0 = rng.random(shape) < lam
    z1 = rng.random(shape) < lam * (1.0 - rho)
    z2 = rng.random(shape) < lam + rho * (1.0 - lam)
    x = z0
    y = np.where(z0, z2, z1)
    if size is None and x.ndim == 0:
        return int(x), int(y)
    return x.astype(np.int8), y.astype(np.int8)


def sample_corr_er(params: CorrErParams, rng: np.random.Generator):
    """Sample an adjacency-matrix pair ``(A, B)`` from the model.

    Each unordered pair u < v is drawn independently via
    ``sample_bivariate_bernoulli(Lambda[u, v], R[u, v])``; both matrices
    are symmetric and hollow.
    """
    n = params.n
    iu = np.triu_indices(n, 1)
    x, y = sample_bivariate_bernoulli(params.Lambda[iu], params.R[iu], rng)
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    A[iu] = x
    B[iu] = y
    return A + A.T, B + B.T


def expected_trace(params: CorrErParams, P, Q) -> float:
    """Exact ``E[trace(A P B Q^T)]`` for permutation matrices P, Q.

    Equals ``trace(Lambda P Lambda Q^T)`` plus the covariance correction
    ``sum_{i != j} S_ij (P_ii Q_jj + P_ji Q_ij)``; exact for the hollow
    sampler because Lambda's diagonal is zero.
    """
    from .core import perm_to_matrix

    P = np.asarray(P)
    Q = np.asarray(Q)
    if P.ndim == 1:
        P = perm_to_matrix(P)
    if Q.ndim == 1:
        Q = perm_to_matrix(Q)
    L = params.Lambda
    if P.shape != L.shape or Q.shape != L.shape:
        raise ValueError("P, Q must match the model size")
    S = covariance_matrix(params)
    first = float(np.trace(L @ P @ L @ Q.T))
    dP = np.diagonal(P)
    dQ = np.diagonal(Q)
    # S is hollow, so the i == j terms vanish from both sums below.
    second = float(dP @ S @ dQ) + float((S * P.T * Q).sum())
    return first + second


@dataclass(frozen=True)
class TheoryThresholds:
    """Plug-in convergence-theory quantities for a model at a given size.

    ``ell`` is the minimum initialization trace the two-step guarantee
    asks for, ``m`` the one-step basin width, ``C`` the covariance lower
    bound and ``epsilon`` the variance upper bound. The constants are
    loose; ``binding`` is False when ``ell`` exceeds n, in which case the
    thresholds are diagnostic only at this scale.
    """

    C: float
    epsilon: float
    ell: float
    m: float
    delta: float
    n: int

    @property
    def binding(self) -> bool:
        return self.ell <= self.n


def theory_thresholds(params: CorrErParams, delta: float) -> TheoryThresholds:
    """Compute the two-step-convergence threshold quantities.

    ``epsilon = max_{i != j} 3 Lambda_ij (1 - Lambda_ij) + 2 R_ij``,
    ``C = min_{i != j} R_ij Lambda_ij (1 - Lambda_ij)``,
    ``ell = 2 sqrt(n^(1+2 delta)) epsilon / C^2`` and
    ``m = C^2 n^(1-delta) log(n) / epsilon``.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    n = params.n
    off = ~np.eye(n, dtype=bool)
    L = params.Lambda[off]
    R = params.R[off]
    epsilon = float((3.0 * L * (1.0 - L) + 2.0 * R).max())
    C = float((R * L * (1.0 - L)).min())
    if C <= 0:
        raise ValueError("minimum edgewise covariance is zero; thresholds undefined")
    ell = 2.0 * np.sqrt(n ** (1.0 + 2.0 * delta)) * epsilon / C**2
    m = C**2 * n ** (1.0 - delta) * np.log(n) / epsilon
    return TheoryThresholds(C=C, epsilon=epsilon, ell=float(ell), m=float(m), delta=delta, n=n)


@dataclass(frozen=True)
class ModelSpec:
    """Parsed model document: a graph-pair distribution plus optional seed."""

    kind: str
    n: int
    r: float
    p: float | None = None
    blocks: tuple | None = None
    within_p: float | None = None
    between_p: float | None = None
    rng_seed: int | None = None


_MODEL_KEYS = {
    "hom": {"model", "n", "p", "r", "rng_seed"},
    "sbm": {"model", "blocks", "within_p", "between_p", "r", "rng_seed"},
    "rdpg": {"model", "n", "r", "rng_seed"},
}


def model_from_json(doc: dict) -> ModelSpec:
    """Parse a model document; unknown keys are errors."""
    if "model" not in doc:
        raise ValueError("model document requires a 'model' key")
    kind = doc["model"]
    if kind not in _MODEL_KEYS:
        raise ValueError(f"unknown model kind {kind!r}")
    allowed = _MODEL_KEYS[kind]
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown keys for model {kind!r}: {sorted(unknown)}")
    seed = doc.get("rng_seed")
    if kind == "hom":
        return ModelSpec(kind="hom", n=int(doc["n"]), p=float(doc["p"]), r=float(doc["r"]), rng_seed=seed)
    if kind == "sbm":
        blocks = tuple(int(b) for b in doc["blocks"])
        return ModelSpec(
            kind="sbm",
            n=sum(blocks),
            r=float(doc["r"]),
            blocks=blocks,
            within_p=float(doc["within_p"]),
            between_p=float(doc["between_p"]),
            rng_seed=seed,
        )
    return ModelSpec(kind="rdpg", n=int(doc["n"]), r=float(doc["r"]), rng_seed=seed)


def build_params(spec: ModelSpec, rng: np.random.Generator) -> CorrErParams:
    """Materialize model parameters; draws latent positions for dot-product models."""
    if spec.kind == "hom":
        return hom_params(spec.n, spec.p, spec.r)
    if spec.kind == "sbm":
        return sbm_params(spec.blocks, spec.within_p, spec.between_p, spec.r)
    if spec.kind == "rdpg":
        X = sample_dirichlet_positions(spec.n, rng)
        return rdpg_params(X, spec.r)
    raise ValueError(f"unknown model kind {spec.kind!r}")
