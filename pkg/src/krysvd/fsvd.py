"""Partial SVD from a bidiagonalization.

The Gram matrix B^T B of the lower-bidiagonal factor is symmetric
tridiagonal and known in closed form from the alpha/beta scalars, so the
pipeline is: eigendecompose it, map eigenvectors through P to get right
singular vectors, then recover left vectors as A v / sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bidiag import BidiagConfig, BidiagState, bidiagonalize, orthogonalize, with_k_max
from .linops import (ConfigError, NumericalError, PartialSvd, as_operator,
                     fix_signs)

# Ritz values below (DROP_REL * sigma_1)^2 carry no usable direction; they
# are dropped rather than surfaced as garbage triplets.
DROP_REL = 1e-14


@dataclass(frozen=True)
class SymTridiag:
    """Symmetric tridiagonal matrix: main diagonal plus one off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        if self.diag.ndim != 1 or self.offdiag.ndim != 1:
            raise ConfigError("SymTridiag wants 1-d diag and offdiag")
        if self.offdiag.shape[0] != max(self.diag.shape[0] - 1, 0):
            raise ConfigError(
                f"offdiag length {self.offdiag.shape[0]} does not fit "
                f"diag length {self.diag.shape[0]}")

    def to_dense(self) -> np.ndarray:
        n = self.diag.shape[0]
        T = np.zeros((n, n))
        T[np.arange(n), np.arange(n)] = self.diag
        if n > 1:
            T[np.arange(n - 1), np.arange(1, n)] = self.offdiag
            T[np.arange(1, n), np.arange(n - 1)] = self.offdiag
        return T


def gram_tridiag(state: BidiagState) -> SymTridiag:
    """T = B^T B in closed form, no product ever materialized.

    diag_i = alpha_i^2 + beta_{i+1}^2, off_i = alpha_{i+1} * beta_{i+1}.
    """
    if state.k_prime == 0:
        raise NumericalError("degenerate bidiagonalization (k' = 0) has no Gram matrix")
    a, b = state.alphas, state.betas
    d = a * a + b[1:] * b[1:]
    off = a[1:] * b[1:-1]
    return SymTridiag(diag=d, offdiag=off)


def symtridiag_eig(tri: SymTridiag, vectors: bool = True):
    """All eigenvalues (and optionally eigenvectors) of a symmetric
    tridiagonal matrix, descending.

    Implicit-shift QL with deflation. Eigenvalues come out accurate to a
    few ulps of max|theta|; the accumulated rotations keep the eigenvector
    matrix orthogonal to working precision. Returns (theta, G) with
    G[:, i] the eigenvector for theta[i], or (theta, None) when
    vectors=False.
    """
    n = tri.diag.shape[0]
    if n == 0:
        raise ConfigError("empty tridiagonal")
    d = np.array(tri.diag, dtype=np.float64, copy=True)
    e = np.zeros(n)
    if n > 1:
        e[:n - 1] = tri.offdiag
    Z = np.eye(n) if vectors else None
    tiny = np.finfo(np.float64).eps

    for l in range(n):
        for _sweep in range(64):
            # locate the first negligible coupling at or after l
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= tiny * dd:
                    break
                m += 1
            if m == l:
                break
            # implicit shift from the 2x2 at l, then chase the bulge up
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    # both new columns must come from the old ones
                    zi = Z[:, i].copy()
                    zi1 = Z[:, i + 1].copy()
                    Z[:, i + 1] = s * zi + c * zi1
                    Z[:, i] = c * zi - s * zi1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
        else:
            raise NumericalError("tridiagonal QL did not converge in 64 sweeps")

    order = np.argsort(-d, kind="stable")
    theta = d[order]
    return theta, (Z[:, order] if Z is not None else None)


# A recovered left vector A v / sigma is a unit vector when the Ritz pair is
# a genuine singular triplet. Iterations past the numerical rank can emit
# spurious pairs whose recovered vector (nearly) collapses onto the span of
# the previous ones; anything whose independent component falls below this
# is cut, together with everything after it in the sigma ordering.
DEPENDENT_TOL = 1e-2


def _orthonormalize_columns(U):
    """Two classical Gram-Schmidt passes per column, on a copy. Returns
    (U, n_good) where n_good is the count of leading independent columns."""
    U = U.copy()
    for i in range(U.shape[1]):
        v = orthogonalize(U[:, i], U[:, :i], passes=2)
        nrm = float(np.linalg.norm(v))
        if nrm < DEPENDENT_TOL:
            return U[:, :i], i
        U[:, i] = v / nrm
    return U, U.shape[1]


def fsvd(A, k: int, r: int, cfg: BidiagConfig | None = None,
         orthonormalize_u: bool = True, return_details: bool = False):
    """Top-r singular triplets from at most k Golub-Kahan iterations.

    The bidiagonalization stops on its own at the numerical rank, so
    k = min(m, n) asks for a full-spectrum capture. If fewer than r usable
    directions come back (early termination, or Ritz values under the
    relative floor), the result is truncated and flagged rather than padded.

    orthonormalize_u runs a final Gram-Schmidt pass over the recovered left
    vectors; it costs O(m r^2) and pins their cross products to rounding
    level. With return_details=True the BidiagState and the Ritz values
    ride along as (psvd, state, theta).
    """
    op = as_operator(A)
    m, n = op.shape
    if not 1 <= r <= k <= min(m, n):
        raise ConfigError(
            f"need 1 <= r <= k <= min(m,n); got r={r}, k={k}, min(m,n)={min(m, n)}")
    cfg = BidiagConfig(k_max=k) if cfg is None else with_k_max(cfg, k)
    state = bidiagonalize(op, cfg)
    if state.degenerate:
        empty = PartialSvd(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)),
                           truncated=True, n_dropped=0)
        return (empty, state, np.zeros(0)) if return_details else empty

    theta, G = symtridiag_eig(gram_tridiag(state))
    sigma1 = math.sqrt(max(float(theta[0]), 0.0))
    floor = (DROP_REL * sigma1) ** 2
    n_keep = int((theta > floor).sum())  # theta is descending: kept set is a prefix
    take = min(r, n_keep)

    sig = np.sqrt(theta[:take])
    V = state.P @ G[:, :take]
    U = np.empty((m, take))
    for i in range(take):
        U[:, i] = op.matvec(V[:, i]) / sig[i]
    if orthonormalize_u and take:
        U, n_good = _orthonormalize_columns(U)
        if n_good < take:
            take = n_good
            sig = sig[:take]
            V = V[:, :take]
    U, V = fix_signs(U, V)
    psvd = PartialSvd(U=U, sigma=sig, V=V, truncated=take < r,
                      n_dropped=min(r, state.k_prime) - take)
    return (psvd, state, theta) if return_details else psvd
