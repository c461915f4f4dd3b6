"""Randomized range-finder SVD, the sketching baseline.

Sketch Y = A Omega with l = target_rank + oversampling columns, orthonormalize,
optionally run power iterations (re-orthonormalized every half step), then
lift the small SVD of Q^T A back to the full space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linops import (RSVD_OMEGA, ConfigError, PartialSvd, Seed, as_operator,
                     dense_svd_oracle, fix_signs, substream)


@dataclass(frozen=True)
class RsvdConfig:
    target_rank: int
    oversampling: int = 10
    power_iters: int = 0
    seed: Seed = 0

    def __post_init__(self):
        if self.target_rank < 1:
            raise ConfigError(f"target_rank must be >= 1, got {self.target_rank}")
        if self.oversampling < 0:
            raise ConfigError(f"oversampling must be >= 0, got {self.oversampling}")
        if not 0 <= self.power_iters <= 10:
            raise ConfigError(f"power_iters must be in [0, 10], got {self.power_iters}")

    @property
    def sketch_width(self) -> int:
        return self.target_rank + self.oversampling


def rsvd(A, cfg: RsvdConfig) -> PartialSvd:
    """target_rank triplets from one Gaussian sketch.

    Accuracy is governed by how much of the spectrum the l sketch columns
    capture; with l below the numerical rank the trailing triplets are
    genuinely wrong even though each returned pair is internally consistent.
    """
    op = as_operator(A)
    m, n = op.shape
    l = cfg.sketch_width
    if l > min(m, n):
        raise ConfigError(
            f"sketch width target_rank+oversampling = {l} exceeds min(m,n) = {min(m, n)}")
    omega = substream(cfg.seed, RSVD_OMEGA).standard_normal((n, l))
    Y = op.matmat(omega)
    Q = np.linalg.qr(Y, mode="reduced")[0]
    for _ in range(cfg.power_iters):
        Z = np.linalg.qr(op.rmatmat(Q), mode="reduced")[0]
        Q = np.linalg.qr(op.matmat(Z), mode="reduced")[0]
    B = op.rmatmat(Q).T  # l x n
    small = dense_svd_oracle(B)
    r = cfg.target_rank
    U, V = fix_signs(Q @ small.U[:, :r], small.V[:, :r])
    return PartialSvd(U=U, sigma=small.sigma[:r].copy(), V=V)
