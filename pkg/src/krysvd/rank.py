"""Numerical rank determination.

Run the bidiagonalization to min(m, n) (it stops at breakdown long before
that on low-rank inputs) and count Gram eigenvalues above a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bidiag import BidiagConfig, bidiagonalize, with_k_max
from .fsvd import gram_tridiag, symtridiag_eig
from .linops import ConfigError, as_operator

MODES = ("absolute", "relative")


@dataclass(frozen=True)
class RankReport:
    """rank is the eigenvalue count above the threshold; k_prime is the
    iteration the factorization stopped at. The two can legitimately differ:
    the iteration may run a little past the rank before its residual dies."""

    rank: int
    k_prime: int
    eigenvalues: np.ndarray  # Ritz values of B^T B, descending
    threshold: float
    mode: str


def count_above(eigenvalues, eps: float, mode: str = "absolute"):
    """(count, threshold) of eigenvalues strictly above the threshold.

    absolute mode: threshold = eps. relative: threshold = eps^2 * theta_1,
    i.e. sigma_i > eps * sigma_1. Boundary values do not count.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if not eps > 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
    if mode == "absolute":
        thr = float(eps)
    else:
        thr = float(eps) ** 2 * float(eigenvalues[0]) if eigenvalues.size else 0.0
    return int((eigenvalues > thr).sum()), thr


def estimate_rank(A, eps: float = 1e-8, mode: str = "absolute",
                  cfg: BidiagConfig | None = None) -> RankReport:
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if not eps > 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    op = as_operator(A)
    k = min(op.shape)
    cfg = BidiagConfig(k_max=k) if cfg is None else with_k_max(cfg, k)
    state = bidiagonalize(op, cfg)
    if state.degenerate:
        return RankReport(0, 0, np.zeros(0),
                          eps if mode == "absolute" else 0.0, mode)
    theta, _ = symtridiag_eig(gram_tridiag(state), vectors=False)
    n, thr = count_above(theta, eps, mode)
    return RankReport(rank=n, k_prime=state.k_prime, eigenvalues=theta,
                      threshold=thr, mode=mode)
