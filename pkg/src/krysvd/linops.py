"""Dense matrices, matrix-vector products, seeded generation, SVD oracle.

Everything upstream (Krylov iterations, sketching, retractions) touches
matrices only through ``LinearOperator``, so factored or implicit matrices
slot in wherever a plain ndarray would.

Reproducibility contract: every random draw in the package flows through
``substream``, which keys a counter-based Philox generator by a seed plus a
purpose tag. Distinct purposes never share a stream, and the same seed
reproduces the same bits regardless of call order or platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# A DenseMatrix is a 2-d float64 ndarray, a Vector is 1-d float64.
# Seeds are plain non-negative ints; they key Philox streams.
DenseMatrix = np.ndarray
Vector = np.ndarray
Seed = int


class ShapeMismatchError(ValueError):
    """Operand shapes are incompatible. The message names both shapes."""


class ConfigError(ValueError):
    """Bad configuration value (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """NaN/Inf encountered or a result is numerically undefined (CLI exit code 3)."""


# ---------------------------------------------------------------------------
# seeded randomness
#
# Stream tags. One per purpose, so a single run seed can feed many
# independent generators without any chance of overlap.
GAUSS = 1
SYNTH_LEFT = 2
SYNTH_RIGHT = 3
GK_START = 4
RSVD_OMEGA = 5
TEACHER = 6
PAIRS = 7
INIT_POINT = 8
BATCH_DRAW = 9
RETRACT_STEP = 10
PAD_COMPLEMENT = 11
BENCH_MATRIX = 12
BENCH_METHOD = 13
RSL_TASK = 14


def substream(seed: Seed, *path: int) -> np.random.Generator:
    """Generator for the (seed, path) stream.

    Philox is counter based; streams keyed by distinct (seed, path) tuples
    are independent by construction.
    """
    if seed is None:
        raise ConfigError("seed must be a non-negative int, got None")
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: Seed, *path: int) -> Seed:
    """Child seed for a component that takes its own seed parameter."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# products

def _check_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-d matrix, got shape {A.shape}")
    return A


def matvec(A, x, exact: bool = False) -> Vector:
    """y = A x.

    Default path is a single BLAS gemv call, deterministic run to run for
    fixed inputs on one platform. ``exact=True`` sums each row strictly left
    to right, which pins the floating-point result bit for bit; it is a
    Python loop meant for order-matched oracle tests at small sizes.
    """
    A = _check_matrix(A)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise ShapeMismatchError(f"matvec: A has shape {A.shape}, x has shape {x.shape}")
    if not exact:
        return A @ x
    m, n = A.shape
    y = np.empty(m)
    for i in range(m):
        s = 0.0
        row = A[i]
        for j in range(n):
            s += row[j] * x[j]
        y[i] = s
    return y


def rmatvec(A, y, exact: bool = False) -> Vector:
    """z = A^T y, without materializing the transpose."""
    A = _check_matrix(A)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != A.shape[0]:
        raise ShapeMismatchError(f"rmatvec: A has shape {A.shape}, y has shape {y.shape}")
    if not exact:
        return A.T @ y
    m, n = A.shape
    z = np.empty(n)
    for j in range(n):
        s = 0.0
        for i in range(m):
            s += A[i, j] * y[i]
        z[j] = s
    return z


class LinearOperator:
    """Anything that can apply A x and A^T y and knows its shape."""

    shape: tuple[int, int]

    def matvec(self, x: Vector) -> Vector:
        raise NotImplementedError

    def rmatvec(self, y: Vector) -> Vector:
        raise NotImplementedError

    def matmat(self, X):
        return np.column_stack([self.matvec(X[:, j]) for j in range(X.shape[1])])

    def rmatmat(self, Y):
        return np.column_stack([self.rmatvec(Y[:, j]) for j in range(Y.shape[1])])

    def to_dense(self) -> DenseMatrix:
        raise NotImplementedError


class MatrixOperator(LinearOperator):
    """A dense ndarray behind the operator interface."""

    def __init__(self, A):
        self.A = _check_matrix(A)
        self.shape = self.A.shape

    def matvec(self, x):
        return self.A @ x

    def rmatvec(self, y):
        return self.A.T @ y

    def matmat(self, X):
        return self.A @ X

    def rmatmat(self, Y):
        return self.A.T @ Y

    def to_dense(self):
        return self.A


class FactoredOperator(LinearOperator):
    """left @ core @ right^T applied without forming the product.

    left is d1 x s, core s x s, right d2 x s; products cost O((d1 + d2) s)
    per vector, which is what makes large retraction targets affordable.
    """

    def __init__(self, left, core, right):
        left, core, right = (_check_matrix(x) for x in (left, core, right))
        if left.shape[1] != core.shape[0] or right.shape[1] != core.shape[1]:
            raise ShapeMismatchError(
                f"factored operator: left {left.shape}, core {core.shape}, "
                f"right {right.shape} do not chain")
        self.left, self.core, self.right = left, core, right
        self.shape = (left.shape[0], right.shape[0])

    def matvec(self, x):
        return self.left @ (self.core @ (self.right.T @ x))

    def rmatvec(self, y):
        return self.right @ (self.core.T @ (self.left.T @ y))

    def matmat(self, X):
        return self.left @ (self.core @ (self.right.T @ X))

    def rmatmat(self, Y):
        return self.right @ (self.core.T @ (self.left.T @ Y))

    def to_dense(self):
        return self.left @ self.core @ self.right.T


def as_operator(A) -> LinearOperator:
    if isinstance(A, LinearOperator):
        return A
    return MatrixOperator(A)


# ---------------------------------------------------------------------------
# generators

def gaussian_matrix(m: int, n: int, mean: float = 0.0, std: float = 1.0,
                    seed: Seed = 0) -> DenseMatrix:
    """m x n matrix with i.i.d. N(mean, std^2) entries, bit-reproducible per seed."""
    if m < 1 or n < 1:
        raise ConfigError(f"matrix dims must be >= 1, got {m}x{n}")
    if not std > 0:
        raise ConfigError(f"std must be > 0, got {std}")
    g = substream(seed, GAUSS)
    return mean + std * g.standard_normal((m, n))


def low_rank_synth(m: int, n: int, l: int, seed: Seed = 0) -> DenseMatrix:
    """Rank-l test matrix: M @ N with M (m x l) and N (l x n) standard normal.

    Singular values are distinct almost surely and sigma_{l+1} vanishes to
    rounding, so the numerical rank of the product is unambiguous.
    """
    if m < 1 or n < 1:
        raise ConfigError(f"matrix dims must be >= 1, got {m}x{n}")
    if not 1 <= l <= min(m, n):
        raise ConfigError(f"rank l must be in [1, min(m,n)]; got l={l} for {m}x{n}")
    left = substream(seed, SYNTH_LEFT).standard_normal((m, l))
    right = substream(seed, SYNTH_RIGHT).standard_normal((l, n))
    return left @ right


# ---------------------------------------------------------------------------
# SVD triplets and the dense reference

@dataclass(frozen=True)
class PartialSvd:
    """r singular triplets: A v_i ~= sigma_i u_i with sigma descending.

    truncated / n_dropped record when a factorization came back with fewer
    usable directions than requested.
    """

    U: DenseMatrix
    sigma: np.ndarray
    V: DenseMatrix
    truncated: bool = False
    n_dropped: int = 0

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    def top(self, r: int) -> "PartialSvd":
        """The leading min(r, rank) triplets as a new PartialSvd."""
        r = min(r, self.rank)
        return PartialSvd(self.U[:, :r].copy(), self.sigma[:r].copy(),
                          self.V[:, :r].copy())


def fix_signs(U, V):
    """Shared sign convention: the largest-magnitude entry of each v_i is made
    positive and u_i is flipped along with it, so A v = sigma u is preserved.
    Returns new arrays."""
    U = np.array(U, dtype=np.float64, copy=True)
    V = np.array(V, dtype=np.float64, copy=True)
    if V.shape[1] == 0:
        return U, V
    idx = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[idx, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    return U * s, V * s


ORACLE_CAP = 1024


def dense_svd_oracle(A) -> PartialSvd:
    """All min(m, n) triplets of a dense matrix via LAPACK, sign-normalized.

    This is the trusted reference the iterative paths are compared against.
    Capped at min(m, n) <= 1024 to keep it a deliberate small-scale tool.
    """
    A = _check_matrix(A)
    if min(A.shape) > ORACLE_CAP:
        raise ConfigError(
            f"dense oracle capped at min(m,n) <= {ORACLE_CAP}, got shape {A.shape}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    U, V = fix_signs(U, Vt.T)
    return PartialSvd(U=U, sigma=s, V=V)
