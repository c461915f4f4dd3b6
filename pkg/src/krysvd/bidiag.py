"""Golub-Kahan lower bidiagonalization with full reorthogonalization.

A run builds orthonormal bases Q (left) and P (right) together with scalars
alpha_i, beta_i satisfying the two-term recurrences

    A p_i       = alpha_i q_i + beta_{i+1} q_{i+1}
    A^T q_{i+1} = beta_{i+1} p_i + alpha_{i+1} p_{i+1}

so that A P_k = Q_{k+1} B_{k+1,k} with B lower bidiagonal: alpha_1..alpha_k
on the diagonal, beta_2..beta_{k+1} on the subdiagonal. beta_1 is the norm of
the raw start vector and does not enter B.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .linops import (GK_START, ConfigError, DenseMatrix, NumericalError, Seed,
                     as_operator, substream)


@dataclass(frozen=True)
class BidiagConfig:
    """Knobs for one bidiagonalization run.

    eps is the termination threshold: the iteration stops once the norm of
    the reorthogonalized residual for the next left vector drops below it
    (tested before normalization). reorth_passes = 2 is classical
    Gram-Schmidt applied twice, which keeps the bases orthonormal to
    ~1e-14 even for hundreds of columns; 1 is the cheaper single sweep.
    The start vector is drawn N(start_mean, start_std^2) entrywise.
    """

    k_max: int
    eps: float = 1e-8
    reorth_passes: int = 2
    start_mean: float = 2.0
    start_std: float = 1.0
    seed: Seed = 0

    def __post_init__(self):
        if self.k_max < 1:
            raise ConfigError(f"k_max must be >= 1, got {self.k_max}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.reorth_passes not in (1, 2):
            raise ConfigError(f"reorth_passes must be 1 or 2, got {self.reorth_passes}")
        if not self.start_std > 0:
            raise ConfigError(f"start_std must be > 0, got {self.start_std}")


@dataclass(frozen=True)
class BidiagState:
    """Outcome of a run that performed k_prime iterations.

    alphas has k' entries, betas k'+1 (betas[0] is the start-vector norm),
    P carries k' columns and Q normally k'+1. The single exception: when the
    left space is exhausted (k' == m there is no (k'+1)-th orthonormal
    direction in R^m), Q comes back square with k' columns.

    degenerate means alpha_1 vanished, i.e. A annihilated the start vector
    and the matrix is zero to working precision.
    """

    alphas: np.ndarray
    betas: np.ndarray
    Q: DenseMatrix
    P: DenseMatrix
    k_prime: int
    terminated_early: bool
    degenerate: bool = False


def orthogonalize(v, basis, passes: int = 2):
    """Remove the components of v along the orthonormal columns of basis.

    Classical Gram-Schmidt; two passes leave leftover components at the
    rounding level of the *corrected* vector, which matters whenever the
    correction is large relative to what remains.
    """
    for _ in range(passes):
        if basis.shape[1]:
            v = v - basis @ (basis.T @ v)
    return v


def _assert_finite(v, what: str):
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"non-finite values encountered in {what}")


def _terminal_column(w, beta, Qcols, rng):
    # Complete the basis with one unit vector orthogonal to Qcols. Used only
    # for the terminal column, after the recurrence itself has converged.
    v, nrm = w, beta
    for _ in range(3):
        if nrm > 0 and np.isfinite(nrm):
            v = v / nrm
            v = orthogonalize(v, Qcols, passes=2)
            nrm2 = float(np.linalg.norm(v))
            if nrm2 > 0.5:
                return v / nrm2
        v = rng.standard_normal(w.shape[0])
        nrm = float(np.linalg.norm(v))
    raise NumericalError("could not extend the left basis to k'+1 columns")


def bidiagonalize(A, cfg: BidiagConfig) -> BidiagState:
    """Run the recurrence until k_max iterations or breakdown.

    Breakdown handling: beta_{k'+1} < eps stops the run with the last left
    vector replaced by an orthonormal extension (the normalized residual
    when it is nonzero, otherwise a deterministic draw from the seed's
    stream); a vanished alpha_{k'+1} stops the run the same way. Identical
    (A, cfg) reproduce the state bit for bit.
    """
    op = as_operator(A)
    m, n = op.shape
    if not 1 <= cfg.k_max <= min(m, n):
        raise ConfigError(
            f"k_max must be in [1, min(m,n)] = [1, {min(m, n)}], got {cfg.k_max}")

    rng = substream(cfg.seed, GK_START)
    q = cfg.start_mean + cfg.start_std * rng.standard_normal(m)
    beta1 = float(np.linalg.norm(q))
    if beta1 == 0.0:
        raise NumericalError("start vector has zero norm")
    q /= beta1

    Q = np.empty((m, cfg.k_max + 1))
    P = np.empty((n, cfg.k_max))
    Q[:, 0] = q
    alphas: list = []
    betas = [beta1]

    z = op.rmatvec(q)
    _assert_finite(z, "A^T q_1")
    alpha = float(np.linalg.norm(z))
    if alpha < cfg.eps:
        # A^T q_1 = 0: the matrix is zero almost surely
        return BidiagState(np.zeros(0), np.array(betas), Q[:, :1].copy(),
                           P[:, :0].copy(), 0, True, degenerate=True)
    P[:, 0] = z / alpha
    alphas.append(alpha)

    k_prime = cfg.k_max
    early = False
    for i in range(1, cfg.k_max + 1):
        w = op.matvec(P[:, i - 1]) - alphas[-1] * Q[:, i - 1]
        _assert_finite(w, f"A p_{i}")
        for _ in range(cfg.reorth_passes):
            w -= Q[:, :i] @ (Q[:, :i].T @ w)
        beta = float(np.linalg.norm(w))
        betas.append(beta)
        if beta < cfg.eps:
            k_prime, early = i, True
            if i < m:
                Q[:, i] = _terminal_column(w, beta, Q[:, :i], rng)
            else:
                Q = Q[:, :i]  # left space exhausted, Q stays square
            break
        Q[:, i] = w / beta
        if i == cfg.k_max:
            k_prime, early = i, False
            break
        z = op.rmatvec(Q[:, i]) - beta * P[:, i - 1]
        _assert_finite(z, f"A^T q_{i + 1}")
        for _ in range(cfg.reorth_passes):
            z -= P[:, :i] @ (P[:, :i].T @ z)
        alpha = float(np.linalg.norm(z))
        if alpha < cfg.eps:
            k_prime, early = i, True
            break
        P[:, i] = z / alpha
        alphas.append(alpha)

    q_cols = min(k_prime + 1, Q.shape[1])
    return BidiagState(alphas=np.asarray(alphas, dtype=np.float64),
                       betas=np.asarray(betas, dtype=np.float64),
                       Q=Q[:, :q_cols].copy(), P=P[:, :k_prime].copy(),
                       k_prime=k_prime, terminated_early=early)


def bidiagonal_matrix(state: BidiagState) -> np.ndarray:
    """Dense B of shape (k'+1, k'): alphas on the diagonal, betas[1:] below."""
    k = state.k_prime
    B = np.zeros((k + 1, k))
    B[np.arange(k), np.arange(k)] = state.alphas
    B[np.arange(1, k + 1), np.arange(k)] = state.betas[1:]
    return B


def with_k_max(cfg: BidiagConfig, k_max: int) -> BidiagConfig:
    if cfg.k_max == k_max:
        return cfg
    return dataclasses.replace(cfg, k_max=k_max)
