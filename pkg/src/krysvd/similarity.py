"""Bilinear similarity learning on the fixed-rank manifold.

Scores are f(x, v) = x^T W v with W kept factored, so an evaluation costs
O((d1 + d2) r) and the full d1 x d2 matrix never appears outside gradients.
Training is mini-batch Riemannian SGD under the hinge loss.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .linops import (BATCH_DRAW, INIT_POINT, PAIRS, RETRACT_STEP, TEACHER,
                     ConfigError, DenseMatrix, NumericalError, Seed,
                     derive_seed, low_rank_synth, substream)
from .manifold import FixedRankPoint, RsgdConfig, rsgd_step, truncate_to_rank

# Training aborts when every one of this many consecutive retractions had to
# pad collapsed directions; the step size is then destroying the factor.
MAX_CONSECUTIVE_PADS = 25

INIT_FROB_NORM = 0.1


@dataclass(frozen=True)
class PairSample:
    x: np.ndarray
    v: np.ndarray
    y: float  # +1 or -1


@dataclass(frozen=True)
class PairBatch:
    """Column-stacked paired samples: X is b x d1, V is b x d2, y in {-1, +1}."""

    X: DenseMatrix
    V: DenseMatrix
    y: np.ndarray

    def __post_init__(self):
        if not (self.X.shape[0] == self.V.shape[0] == self.y.shape[0]):
            raise ConfigError(
                f"inconsistent batch: X {self.X.shape}, V {self.V.shape}, y {self.y.shape}")

    def __len__(self) -> int:
        return int(self.y.shape[0])

    def subset(self, idx) -> "PairBatch":
        return PairBatch(self.X[idx], self.V[idx], self.y[idx])

    @classmethod
    def from_samples(cls, samples) -> "PairBatch":
        return cls(np.array([s.x for s in samples], dtype=np.float64),
                   np.array([s.v for s in samples], dtype=np.float64),
                   np.array([s.y for s in samples], dtype=np.float64))


def _as_batch(data) -> PairBatch:
    if isinstance(data, PairBatch):
        return data
    return PairBatch.from_samples(list(data))


def score(W: FixedRankPoint, x, v) -> float:
    """x^T W v through the factors."""
    return float(((np.asarray(x) @ W.U) * W.S) @ (W.V.T @ np.asarray(v)))


def scores(W: FixedRankPoint, batch: PairBatch) -> np.ndarray:
    return np.einsum("br,r,br->b", batch.X @ W.U, W.S, batch.V @ W.V)


def hinge_grad(batch, W: FixedRankPoint):
    """Mean hinge loss max(0, 1 - y f) over the batch, plus the ambient
    subgradient: samples with margin < 1 contribute (-y) x v^T, satisfied
    samples contribute zero (the kink takes the zero branch)."""
    batch = _as_batch(batch)
    s = scores(W, batch)
    margin = batch.y * s
    loss = float(np.mean(np.maximum(0.0, 1.0 - margin)))
    viol = margin < 1.0
    d1, d2 = batch.X.shape[1], batch.V.shape[1]
    if not viol.any():
        return loss, np.zeros((d1, d2))
    w = -batch.y[viol] / len(batch)
    G = (batch.X[viol] * w[:, None]).T @ batch.V[viol]
    return loss, G


def accuracy(W: FixedRankPoint, batch: PairBatch) -> float:
    """Fraction of sign agreements; a zero score counts as +1."""
    s = scores(W, batch)
    pred = np.where(s >= 0.0, 1.0, -1.0)
    return float(np.mean(pred == batch.y))


# ---------------------------------------------------------------------------
# synthetic paired-domain task

@dataclass(frozen=True)
class SynthTask:
    train: PairBatch
    test: PairBatch
    teacher: DenseMatrix


def _draw_pairs(Wstar, n, gen, margin_frac):
    d1, d2 = Wstar.shape
    X = gen.standard_normal((n, d1))
    V = gen.standard_normal((n, d2))
    s = ((X @ Wstar) * V).sum(axis=1)
    # the floor is fixed from the initial draw, then offending samples are
    # redrawn until everything clears it
    floor = margin_frac * float(np.median(np.abs(s)))
    for _ in range(200):
        bad = np.abs(s) < floor
        if not bad.any():
            break
        nb = int(bad.sum())
        X[bad] = gen.standard_normal((nb, d1))
        V[bad] = gen.standard_normal((nb, d2))
        s[bad] = ((X[bad] @ Wstar) * V[bad]).sum(axis=1)
    else:
        raise NumericalError("margin-floor redraw did not settle in 200 rounds")
    y = np.where(s >= 0.0, 1.0, -1.0)
    return PairBatch(X, V, y)


def synth_task(d1: int, d2: int, r_true: int, n_train: int, n_test: int,
               seed: Seed = 0, margin_frac: float = 0.1) -> SynthTask:
    """Teacher W* = rank-r_true Gaussian product scaled to unit Frobenius
    norm; pairs are standard normal; labels are sign(x^T W* v). Samples with
    |score| below margin_frac * median|score| of the initial draw are redrawn
    so no label sits on the decision boundary."""
    if n_train < 1 or n_test < 1:
        raise ConfigError(f"need n_train, n_test >= 1, got {n_train}, {n_test}")
    Wstar = low_rank_synth(d1, d2, r_true, seed=derive_seed(seed, TEACHER))
    Wstar = Wstar / np.linalg.norm(Wstar)
    train = _draw_pairs(Wstar, n_train, substream(seed, PAIRS, 0), margin_frac)
    test = _draw_pairs(Wstar, n_test, substream(seed, PAIRS, 1), margin_frac)
    return SynthTask(train=train, test=test, teacher=Wstar)


def load_pairs_csv(path) -> PairBatch:
    """CSV with header x_0..x_{d1-1},v_0..v_{d2-1},y; one sample per row."""
    with open(path) as f:
        header = f.readline().strip().split(",")
    d1 = sum(1 for h in header if h.startswith("x_"))
    d2 = sum(1 for h in header if h.startswith("v_"))
    expected = [f"x_{i}" for i in range(d1)] + [f"v_{j}" for j in range(d2)] + ["y"]
    if d1 == 0 or d2 == 0 or header != expected:
        raise ConfigError(f"{path}: header must read x_0..x_*, v_0..v_*, y")
    body = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64, ndmin=2)
    if body.shape[1] != d1 + d2 + 1:
        raise ConfigError(f"{path}: rows have {body.shape[1]} fields, "
                          f"header promises {d1 + d2 + 1}")
    y = body[:, -1]
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ConfigError(f"{path}: labels must be +1 or -1")
    return PairBatch(body[:, :d1], body[:, d1:d1 + d2], y)


# ---------------------------------------------------------------------------
# training

@dataclass(frozen=True)
class TrainHistory:
    steps: np.ndarray
    loss: np.ndarray
    seconds: np.ndarray
    sigma_min: np.ndarray
    sigma_max: np.ndarray
    padded: np.ndarray
    eval_steps: np.ndarray
    eval_accuracy: np.ndarray
    init_accuracy: float
    final_accuracy: float


def init_point(d1: int, d2: int, cfg: RsgdConfig) -> FixedRankPoint:
    """Gaussian init truncated to rank r and rescaled to Frobenius norm 0.1."""
    inner_k = cfg.effective_inner_k(d1, d2)
    W0 = substream(cfg.seed, INIT_POINT).standard_normal((d1, d2))
    W = truncate_to_rank(W0, cfg.rank, inner_k, backend="fsvd",
                         seed=derive_seed(cfg.seed, INIT_POINT))
    frob = float(np.sqrt(np.sum(W.S ** 2)))
    return dataclasses.replace(W, S=W.S * (INIT_FROB_NORM / frob))


def train(data, cfg: RsgdConfig, svd_backend: str = "fsvd", test=None,
          eval_every: int = 100):
    """Mini-batch RSGD. Returns (W, TrainHistory).

    Deterministic given cfg.seed: the init, every batch draw and every
    retraction start vector come from streams derived from it, so reruns
    reproduce the loss curve bit for bit (timings aside). final_accuracy is
    measured on `test` when given, else on the training data.
    """
    if svd_backend not in ("fsvd", "dense"):
        raise ConfigError(f"svd_backend must be fsvd|dense, got {svd_backend!r}")
    data = _as_batch(data)
    test = _as_batch(test) if test is not None else None
    d1, d2 = data.X.shape[1], data.V.shape[1]
    W = init_point(d1, d2, cfg)
    init_acc = accuracy(W, test if test is not None else data)

    batch_rng = substream(cfg.seed, BATCH_DRAW)
    hist_loss, hist_sec, hist_smin, hist_smax, hist_pad = [], [], [], [], []
    eval_steps, eval_acc = [], []
    consecutive_pads = 0
    for t in range(cfg.n_steps):
        t0 = time.perf_counter()
        idx = batch_rng.integers(0, len(data), size=cfg.batch_size)
        loss, G = hinge_grad(data.subset(idx), W)
        W = rsgd_step(W, G, cfg, seed=derive_seed(cfg.seed, RETRACT_STEP, t),
                      backend=svd_backend)
        hist_sec.append(time.perf_counter() - t0)
        hist_loss.append(loss)
        hist_smin.append(float(W.S.min()))
        hist_smax.append(float(W.S.max()))
        hist_pad.append(W.padded)
        consecutive_pads = consecutive_pads + 1 if W.padded else 0
        if consecutive_pads >= MAX_CONSECUTIVE_PADS:
            raise NumericalError(
                f"rank collapsed on {MAX_CONSECUTIVE_PADS} consecutive retractions "
                f"(step {t}); eta is likely too large for this task")
        if eval_every and test is not None and (t + 1) % eval_every == 0:
            eval_steps.append(t + 1)
            eval_acc.append(accuracy(W, test))

    final_acc = accuracy(W, test if test is not None else data)
    history = TrainHistory(
        steps=np.arange(cfg.n_steps), loss=np.asarray(hist_loss),
        seconds=np.asarray(hist_sec), sigma_min=np.asarray(hist_smin),
        sigma_max=np.asarray(hist_smax), padded=np.asarray(hist_pad, dtype=int),
        eval_steps=np.asarray(eval_steps, dtype=int),
        eval_accuracy=np.asarray(eval_acc),
        init_accuracy=init_acc, final_accuracy=final_acc)
    return W, history
