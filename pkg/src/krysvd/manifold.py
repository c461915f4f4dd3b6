"""Fixed-rank matrix manifold: tangent projection, retraction, one SGD step.

Points are kept factored as W = U diag(S) V^T with orthonormal U, V. Tangent
vectors at W are U M V^T + Up V^T + U Vp^T with U^T Up = 0 and V^T Vp = 0.
The retraction is the metric projection: a rank-r truncated SVD of W + xi,
computed by the Krylov pipeline (or the dense oracle for reference runs).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .bidiag import BidiagConfig, orthogonalize
from .fsvd import fsvd
from .linops import (PAD_COMPLEMENT, RETRACT_STEP, ConfigError, DenseMatrix,
                     FactoredOperator, NumericalError, PartialSvd, Seed,
                     ShapeMismatchError, dense_svd_oracle, derive_seed,
                     substream)

# Above this many ambient entries the shifted point stays factored and the
# truncation runs matrix-free.
DENSE_AMBIENT_CAP = 10 ** 7

# Sigma assigned to directions invented after a rank collapse, relative to
# sigma_1 of the surviving spectrum.
PAD_SIGMA_REL = 1e-12

BACKENDS = ("fsvd", "dense")


@dataclass(frozen=True)
class FixedRankPoint:
    """W = U diag(S) V^T. S is positive and non-increasing; padded counts
    directions that were invented to restore rank after a collapse."""

    U: DenseMatrix
    S: np.ndarray
    V: DenseMatrix
    padded: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.U.shape[0], self.V.shape[0])

    @property
    def rank(self) -> int:
        return int(self.S.shape[0])


@dataclass(frozen=True)
class TangentVector:
    M: np.ndarray
    Up: DenseMatrix
    Vp: DenseMatrix

    def scaled(self, c: float) -> "TangentVector":
        return TangentVector(c * self.M, c * self.Up, c * self.Vp)


@dataclass(frozen=True)
class RsgdConfig:
    """Stochastic Riemannian descent knobs.

    inner_k bounds the Krylov iterations inside each retraction; None means
    4 * rank. lam is the multiple of W subtracted from the ambient gradient
    before projecting. literal_alg4 switches the update to the variant whose
    projectors come from an SVD of the gradient itself (see rsgd_step).
    """

    eta: float
    rank: int
    lam: float = 0.0
    inner_k: int | None = None
    n_steps: int = 500
    batch_size: int = 32
    literal_alg4: bool = False
    seed: Seed = 0

    def __post_init__(self):
        if not self.eta >= 0:
            raise ConfigError(f"eta must be >= 0, got {self.eta}")
        if self.rank < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if self.inner_k is not None and self.inner_k < self.rank:
            raise ConfigError(
                f"inner_k must be >= rank, got inner_k={self.inner_k} rank={self.rank}")
        if self.n_steps < 0:
            raise ConfigError(f"n_steps must be >= 0, got {self.n_steps}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")

    def effective_inner_k(self, d1: int, d2: int) -> int:
        k = 4 * self.rank if self.inner_k is None else self.inner_k
        return min(k, d1, d2)


def embed_point(W: FixedRankPoint) -> DenseMatrix:
    return (W.U * W.S) @ W.V.T


def embed_tangent(W: FixedRankPoint, xi: TangentVector) -> DenseMatrix:
    return W.U @ xi.M @ W.V.T + xi.Up @ W.V.T + W.U @ xi.Vp.T


def project_tangent(W: FixedRankPoint, G) -> TangentVector:
    """Orthogonal projection of an ambient matrix onto the tangent space:
    M = U^T G V, Up = G V - U M, Vp = G^T U - V M^T."""
    G = np.asarray(G, dtype=np.float64)
    if G.shape != W.shape:
        raise ShapeMismatchError(
            f"ambient gradient has shape {G.shape}, point has shape {W.shape}")
    GV = G @ W.V
    GtU = G.T @ W.U
    M = W.U.T @ GV
    return TangentVector(M=M, Up=GV - W.U @ M, Vp=GtU - W.V @ M.T)


def shifted_operator(W: FixedRankPoint, xi: TangentVector, step: float):
    """W + step * xi as a factored operator of inner size 2r."""
    r = W.rank
    left = np.hstack([W.U, xi.Up])
    right = np.hstack([W.V, xi.Vp])
    core = np.zeros((2 * r, 2 * r))
    core[:r, :r] = np.diag(W.S) + step * xi.M
    core[:r, r:] = step * np.eye(r)
    core[r:, :r] = step * np.eye(r)
    return FactoredOperator(left, core, right)


def _pad_basis(X, count, rng):
    # append `count` orthonormal complement columns to X
    cols = [X]
    have = X
    for _ in range(count):
        for _attempt in range(4):
            v = rng.standard_normal(X.shape[0])
            v = orthogonalize(v, have, passes=2)
            nrm = float(np.linalg.norm(v))
            if nrm > 1e-8:
                break
        else:
            raise NumericalError("could not pad an orthonormal basis")
        v = v / nrm
        have = np.column_stack([have, v])
    return have


def _point_from_svd(psvd: PartialSvd, r: int, seed: Seed) -> FixedRankPoint:
    # keep strictly positive directions, pad the rest at PAD_SIGMA_REL * sigma_1
    good = int((psvd.sigma > 0).sum())
    good = min(good, r)
    if good == 0:
        raise NumericalError("retraction target is numerically zero; "
                             "no rank-r point is defined")
    missing = r - good
    if missing == 0:
        return FixedRankPoint(psvd.U[:, :r].copy(), psvd.sigma[:r].copy(),
                              psvd.V[:, :r].copy())
    rng = substream(seed, PAD_COMPLEMENT)
    U = _pad_basis(psvd.U[:, :good], missing, rng)
    V = _pad_basis(psvd.V[:, :good], missing, rng)
    S = np.concatenate([psvd.sigma[:good],
                        np.full(missing, PAD_SIGMA_REL * psvd.sigma[0])])
    return FixedRankPoint(U, S, V, padded=missing)


def truncate_to_rank(target, r: int, inner_k: int, backend: str = "fsvd",
                     seed: Seed = 0) -> FixedRankPoint:
    """Rank-r point nearest to `target` (dense matrix or operator)."""
    if backend not in BACKENDS:
        raise ConfigError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if backend == "dense":
        dense = target if isinstance(target, np.ndarray) else target.to_dense()
        full = dense_svd_oracle(dense)
        psvd = full.top(r)
    else:
        psvd = fsvd(target, k=inner_k, r=r, cfg=BidiagConfig(k_max=inner_k, seed=seed))
    return _point_from_svd(psvd, r, seed)


def retract(W: FixedRankPoint, xi: TangentVector, step: float,
            inner_k: int | None = None, backend: str = "fsvd",
            seed: Seed = 0) -> FixedRankPoint:
    """Metric-projection retraction: rank-r truncated SVD of W + step * xi.

    Up to DENSE_AMBIENT_CAP entries the shifted matrix is materialized (the
    Krylov matvecs are then plain BLAS); above it the factored form is used
    and nothing of size d1 x d2 is ever built. If fewer than r directions
    survive, the missing ones are padded with orthonormal complement vectors
    at sigma = 1e-12 * sigma_1 and the returned point is marked `padded`.
    """
    r = W.rank
    d1, d2 = W.shape
    if inner_k is None:
        inner_k = min(4 * r, d1, d2)
    if inner_k < r:
        raise ConfigError(f"inner_k must be >= rank, got {inner_k} < {r}")
    op = shifted_operator(W, xi, step)
    target = op.to_dense() if d1 * d2 <= DENSE_AMBIENT_CAP else op
    return truncate_to_rank(target, r, inner_k, backend=backend, seed=seed)


def rsgd_step(W: FixedRankPoint, G, cfg: RsgdConfig, seed: Seed | None = None,
              backend: str = "fsvd") -> FixedRankPoint:
    """One descent step from the ambient gradient G.

    Default route: shrink (G - lam * W), project onto the tangent space at
    W, retract with step -eta. literal_alg4 route: the projectors are built
    from a rank-r SVD of the shrunk gradient itself, the combination
    P_U G + G P_V - P_U G P_V is subtracted in ambient space, and the result
    is truncated back to rank r. The two disagree in general; both are kept
    so the harness can report them side by side.
    """
    d1, d2 = W.shape
    seed = cfg.seed if seed is None else seed
    inner_k = cfg.effective_inner_k(d1, d2)
    G = np.asarray(G, dtype=np.float64)
    if G.shape != W.shape:
        raise ShapeMismatchError(f"gradient shape {G.shape} vs point shape {W.shape}")
    if cfg.lam != 0.0:
        G = G - cfg.lam * embed_point(W)

    if not cfg.literal_alg4:
        xi = project_tangent(W, G)
        return retract(W, xi.scaled(-1.0), cfg.eta, inner_k=inner_k,
                       backend=backend, seed=seed)

    if not np.any(G):
        Z = np.zeros_like(G)
    else:
        gsvd = fsvd(G, k=min(inner_k, d1, d2), r=min(cfg.rank, min(d1, d2)),
                    cfg=BidiagConfig(k_max=min(inner_k, d1, d2),
                                     seed=derive_seed(seed, RETRACT_STEP, 1)))
        Ug, Vg = gsvd.U, gsvd.V
        GV = G @ Vg
        Z = Ug @ (Ug.T @ G) + GV @ Vg.T - Ug @ ((Ug.T @ GV) @ Vg.T)
    target = embed_point(W) - cfg.eta * Z
    return truncate_to_rank(target, W.rank, inner_k, backend=backend, seed=seed)
