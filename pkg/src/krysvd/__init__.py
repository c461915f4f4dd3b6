"""Matrix-free partial SVD via Golub-Kahan bidiagonalization, plus a
randomized-SVD baseline and fixed-rank Riemannian SGD for bilinear
similarity learning."""

from .bidiag import BidiagConfig, BidiagState, bidiagonal_matrix, bidiagonalize
from .fsvd import SymTridiag, fsvd, gram_tridiag, symtridiag_eig
from .linops import (ConfigError, FactoredOperator, LinearOperator,
                     MatrixOperator, NumericalError, PartialSvd,
                     ShapeMismatchError, as_operator, dense_svd_oracle,
                     derive_seed, fix_signs, gaussian_matrix, low_rank_synth,
                     matvec, rmatvec, substream)
from .manifold import (FixedRankPoint, RsgdConfig, TangentVector, embed_point,
                       embed_tangent, project_tangent, retract, rsgd_step,
                       truncate_to_rank)
from .matrixio import read_csv_matrix, read_matrix, write_matrix
from .rank import RankReport, count_above, estimate_rank
from .rsvd import RsvdConfig, rsvd
from .similarity import (PairBatch, PairSample, SynthTask, TrainHistory,
                         accuracy, hinge_grad, init_point, load_pairs_csv,
                         score, scores, synth_task, train)

__version__ = "0.1.0"

__all__ = [
    "BidiagConfig", "BidiagState", "bidiagonal_matrix", "bidiagonalize",
    "SymTridiag", "fsvd", "gram_tridiag", "symtridiag_eig",
    "ConfigError", "FactoredOperator", "LinearOperator", "MatrixOperator",
    "NumericalError", "PartialSvd", "ShapeMismatchError", "as_operator",
    "dense_svd_oracle", "derive_seed", "fix_signs", "gaussian_matrix",
    "low_rank_synth", "matvec", "rmatvec", "substream",
    "FixedRankPoint", "RsgdConfig", "TangentVector", "embed_point",
    "embed_tangent", "project_tangent", "retract", "rsgd_step",
    "truncate_to_rank",
    "read_csv_matrix", "read_matrix", "write_matrix",
    "RankReport", "count_above", "estimate_rank",
    "RsvdConfig", "rsvd",
    "PairBatch", "PairSample", "SynthTask", "TrainHistory", "accuracy",
    "hinge_grad", "init_point", "load_pairs_csv", "score", "scores",
    "synth_task", "train",
    "__version__",
]
