"""Sketching baseline: exactness on easy inputs, known failure off the end."""

import numpy as np
import pytest

from krysvd import (ConfigError, RsvdConfig, dense_svd_oracle, gaussian_matrix,
                    low_rank_synth, rsvd)


def reconstruction_rel(A, psvd):
    A = np.asarray(A)
    R = A - psvd.U @ (psvd.sigma[:, None] * psvd.V.T)
    return float(np.linalg.norm(R) / np.linalg.norm(A))


class TestRsvd:
    def test_diag_no_oversampling(self):
        # sketch width equals the exact rank: the range is captured exactly
        A = np.diag([4.0, 2.0, 1.0])
        psvd = rsvd(A, RsvdConfig(target_rank=3, oversampling=0, seed=1))
        assert np.allclose(psvd.sigma, [4.0, 2.0, 1.0], atol=1e-12)
        assert reconstruction_rel(A, psvd) < 1e-12

    def test_low_rank_capture(self):
        A = low_rank_synth(120, 90, 20, seed=2)
        psvd = rsvd(A, RsvdConfig(target_rank=20, oversampling=10, seed=2))
        ref = dense_svd_oracle(A)
        assert np.max(np.abs(psvd.sigma - ref.sigma[:20]) / ref.sigma[0]) < 1e-10
        assert reconstruction_rel(A, psvd) < 1e-10
        assert np.max(np.abs(psvd.U.T @ psvd.U - np.eye(20))) < 1e-12
        assert np.max(np.abs(psvd.V.T @ psvd.V - np.eye(20))) < 1e-12

    def test_sigma_never_above_oracle(self):
        # Rayleigh-Ritz from a subspace can only underestimate
        A = gaussian_matrix(100, 80, seed=3)
        psvd = rsvd(A, RsvdConfig(target_rank=15, oversampling=5, seed=3))
        ref = dense_svd_oracle(A)
        assert np.all(psvd.sigma <= ref.sigma[:15] + 1e-10 * ref.sigma[0])

    def test_power_iterations_tighten_tail(self):
        # flat-spectrum input: extra passes must not hurt, and usually help
        A = gaussian_matrix(200, 150, seed=4)
        ref = dense_svd_oracle(A)
        gap0 = np.sum(ref.sigma[:10] - rsvd(
            A, RsvdConfig(10, 5, power_iters=0, seed=4)).sigma)
        gap2 = np.sum(ref.sigma[:10] - rsvd(
            A, RsvdConfig(10, 5, power_iters=2, seed=4)).sigma)
        assert gap0 >= -1e-9
        assert gap2 <= gap0 + 1e-9

    def test_mid_size_full_capture(self):
        A = low_rank_synth(500, 500, 50, seed=5)
        psvd = rsvd(A, RsvdConfig(target_rank=50, oversampling=10, seed=5))
        assert reconstruction_rel(A, psvd) < 1e-10

    def test_undersketching_misses_mass(self):
        # sketch width far below the rank: the residual stays macroscopic
        A = low_rank_synth(300, 300, 100, seed=6)
        psvd = rsvd(A, RsvdConfig(target_rank=20, oversampling=10, seed=6))
        R = A - psvd.U @ (psvd.sigma[:, None] * psvd.V.T)
        assert np.linalg.norm(R) > 1e2

    def test_determinism_and_seed_sensitivity(self):
        A = low_rank_synth(80, 60, 10, seed=7)
        a = rsvd(A, RsvdConfig(target_rank=10, seed=7))
        b = rsvd(A, RsvdConfig(target_rank=10, seed=7))
        c = rsvd(A, RsvdConfig(target_rank=10, seed=8))
        assert np.array_equal(a.U, b.U)
        assert np.array_equal(a.sigma, b.sigma)
        assert np.array_equal(a.V, b.V)
        assert not np.array_equal(a.U, c.U)

    def test_validation(self):
        with pytest.raises(ConfigError):
            RsvdConfig(target_rank=0)
        with pytest.raises(ConfigError):
            RsvdConfig(target_rank=2, oversampling=-1)
        with pytest.raises(ConfigError):
            RsvdConfig(target_rank=2, power_iters=11)
        with pytest.raises(ConfigError):
            rsvd(np.eye(4), RsvdConfig(target_rank=4, oversampling=10))

    def test_sketch_width_property(self):
        assert RsvdConfig(target_rank=20, oversampling=10).sketch_width == 30
