"""Rank counting: strict thresholds, both modes, end-to-end estimates."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krysvd import (BidiagConfig, ConfigError, count_above, estimate_rank,
                    low_rank_synth)


class TestCountAbove:
    def test_strict_boundary(self):
        theta = np.array([1.0, 1e-8, 1e-24])
        n, thr = count_above(theta, 1e-8, "absolute")
        assert (n, thr) == (1, 1e-8)  # the boundary value does not count
        n, _ = count_above(theta, 1e-9, "absolute")
        assert n == 2

    def test_exact_tie_excluded(self):
        n, _ = count_above(np.array([1.0, 0.5]), 0.5, "absolute")
        assert n == 1

    def test_relative_threshold(self):
        theta = np.array([4.0, 1e-6])
        n, thr = count_above(theta, 1e-2, "relative")
        assert thr == 1e-4 * 4.0
        assert n == 1
        n, _ = count_above(theta, 1e-4, "relative")
        assert n == 2

    def test_empty(self):
        assert count_above(np.zeros(0), 1e-8, "absolute") == (0, 1e-8)
        assert count_above(np.zeros(0), 1e-8, "relative") == (0, 0.0)

    def test_validation(self):
        with pytest.raises(ConfigError):
            count_above(np.ones(2), 1e-8, "fuzzy")
        with pytest.raises(ConfigError):
            count_above(np.ones(2), 0.0)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(1e-20, 1e10), min_size=1, max_size=30),
           st.floats(1e-20, 1e5), st.floats(1.0, 1e6))
    def test_monotone_in_eps(self, vals, eps, factor):
        theta = np.sort(np.asarray(vals))[::-1]
        lo, _ = count_above(theta, eps, "absolute")
        hi, _ = count_above(theta, eps * factor, "absolute")
        assert hi <= lo  # raising the bar never admits more


class TestEstimateRank:
    def test_padded_diag(self):
        A = np.zeros((6, 4))
        A[0, 0], A[1, 1] = 5.0, 3.0
        rep = estimate_rank(A)
        assert rep.rank == 2
        assert rep.k_prime == 2
        assert rep.mode == "absolute"
        assert rep.eigenvalues.shape == (2,)
        assert np.allclose(np.sqrt(rep.eigenvalues), [5.0, 3.0], atol=1e-10)

    def test_zero_matrix(self):
        rep = estimate_rank(np.zeros((5, 3)))
        assert rep.rank == 0
        assert rep.k_prime == 0
        assert rep.eigenvalues.shape == (0,)

    def test_thousand_square_rank_100(self):
        A = low_rank_synth(1000, 1000, 100, seed=7)
        rep = estimate_rank(A, cfg=BidiagConfig(k_max=1, seed=7))
        assert rep.rank == 100
        assert 100 <= rep.k_prime <= 110

    def test_relative_mode_scale_invariant(self):
        A = low_rank_synth(50, 40, 10, seed=8)
        r1 = estimate_rank(A, eps=1e-6, mode="relative")
        r2 = estimate_rank(1e6 * A, eps=1e-6, mode="relative")
        assert r1.rank == r2.rank == 10
        assert r2.threshold > r1.threshold  # threshold tracks the spectrum

    def test_repeated_spectrum_collapses(self):
        # a single-vector Krylov run cannot see multiplicity: the identity
        # looks rank one because its Krylov space is one dimensional
        rep = estimate_rank(np.eye(5))
        assert rep.rank == 1
        assert rep.k_prime == 1

    def test_monotone_in_eps_end_to_end(self):
        A = low_rank_synth(60, 60, 12, seed=9)
        loose = estimate_rank(A, eps=1e-12).rank
        tight = estimate_rank(A, eps=1e-2).rank
        assert tight <= loose
        assert estimate_rank(A, eps=1e-8).rank == 12

    def test_validation(self):
        with pytest.raises(ConfigError):
            estimate_rank(np.eye(3), mode="fuzzy")
        with pytest.raises(ConfigError):
            estimate_rank(np.eye(3), eps=-1.0)

    def test_determinism(self):
        A = low_rank_synth(80, 70, 20, seed=11)
        a = estimate_rank(A, cfg=BidiagConfig(k_max=1, seed=11))
        b = estimate_rank(A, cfg=BidiagConfig(k_max=1, seed=11))
        assert a.rank == b.rank and a.k_prime == b.k_prime
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
