import math

import numpy as np
import pytest
from scipy.integrate import quad

from ineqlab import measure as ms


class TestFromPotential:
    def test_gaussian_symmetric_normalized(self):
        mu = ms.from_potential(lambda x: x**2, (-8.0, 8.0, 4001))
        assert mu.weights.sum() == pytest.approx(1.0, abs=1e-13)
        assert np.allclose(mu.weights, mu.weights[::-1], rtol=0, atol=1e-15)

    def test_exponential_tail_at_zero(self):
        mu = ms.from_potential(lambda x: np.abs(x), (-40.0, 40.0, 20001))
        assert ms.tail_mass(mu, 0.0) == pytest.approx(0.5, abs=1e-10)

    def test_z_matches_refined_quadrature(self):
        # Richardson-style oracle: adaptive quadrature of e^{-|x|^1.5}.
        # The |x|^1.5 kink limits the trapezoid weights to O(h^2.5) at the
        # origin: 1e-7 at 8001 nodes, 1e-8 from 32001 nodes on.
        z_oracle, _ = quad(lambda t: math.exp(-abs(t) ** 1.5), -20, 20, limit=200)
        mu = ms.from_potential(lambda x: np.abs(x) ** 1.5, (-20.0, 20.0, 8001))
        assert math.exp(mu.log_z) == pytest.approx(z_oracle, rel=1e-7)
        mu_fine = ms.from_potential(lambda x: np.abs(x) ** 1.5, (-20.0, 20.0, 32001))
        assert math.exp(mu_fine.log_z) == pytest.approx(z_oracle, rel=1e-8)

    def test_nan_rejected(self):
        with pytest.raises(ms.MeasureError):
            ms.from_potential(lambda x: np.where(x > 0, np.nan, x), (-1.0, 1.0, 11))

    def test_zero_mass_rejected(self):
        with pytest.raises(ms.MeasureError):
            ms.from_potential(lambda x: np.full_like(x, np.inf), (-1.0, 1.0, 11))

    def test_huge_constant_potential_survives_in_log_space(self):
        mu = ms.from_potential(lambda x: np.full_like(x, 1e9), (-1.0, 1.0, 11))
        assert mu.weights.sum() == pytest.approx(1.0, abs=1e-13)


class TestMuAlpha:
    def test_alpha_range_enforced(self):
        with pytest.raises(ms.MeasureError):
            ms.mu_alpha(0.9)
        with pytest.raises(ms.MeasureError):
            ms.mu_alpha(2.5)

    def test_gaussian_median_zero(self, mu2):
        assert ms.median_point(mu2) == 0.0

    def test_exponential_tail_closed_form(self, mu1):
        for x in (0.5, 1.0, 2.0, 5.0, 10.0):
            assert ms.tail_mass(mu1, x) == pytest.approx(0.5 * math.exp(-x), rel=1e-8)

    def test_beta_metadata(self):
        mu = ms.mu_alpha(1.5, grid=(-13.0, 13.0, 401))
        assert mu.meta["beta"] == pytest.approx(2.0 / 3.0)

    def test_truncation_estimate_small(self, mu1):
        assert mu1.meta["truncation_mass"] < 1e-15


class TestMedian:
    def test_shifted_exponential(self):
        mu = ms.from_potential(lambda x: np.abs(x - 1.0), (-40.0, 40.0, 20001))
        step = mu.nodes[1] - mu.nodes[0]
        assert abs(ms.median_point(mu) - 1.0) <= step

    def test_concentration_near_point(self):
        a = 0.7
        mu = ms.from_potential(lambda x: 50.0 * (x - a) ** 2, (-4.0, 4.0, 8001))
        step = mu.nodes[1] - mu.nodes[0]
        assert abs(ms.median_point(mu) - a) <= step


class TestMasses:
    def test_tail_head_partition(self, mu2):
        for x in (-1.3, 0.0, 0.4, 2.0):
            assert ms.tail_mass(mu2, x) + ms.head_mass(mu2, x) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_tail_at_median_is_half(self, mu2):
        assert ms.tail_mass(mu2, ms.median_point(mu2)) == pytest.approx(0.5, abs=1e-10)

    def test_tail_at_right_end_zero(self, mu2):
        assert ms.tail_mass(mu2, mu2.nodes[-1]) == 0.0

    def test_tail_nonincreasing(self, mu2):
        xs = np.linspace(-6, 6, 101)
        vals = [ms.tail_mass(mu2, x) for x in xs]
        assert np.all(np.diff(vals) <= 1e-15)


class TestHardyWeight:
    def test_exponential_closed_form(self, mu1):
        assert ms.hardy_weight(mu1, 2.0) == pytest.approx(math.e**2 - 1.0, rel=1e-6)

    def test_median_gives_zero(self, mu1, mu2):
        assert ms.hardy_weight(mu1, ms.median_point(mu1)) == 0.0
        assert ms.hardy_weight(mu2, ms.median_point(mu2)) == 0.0

    def test_signed_left_integral(self, mu1):
        assert ms.hardy_weight(mu1, -2.0) == pytest.approx(-(math.e**2 - 1.0), rel=1e-6)

    def test_gaussian_refined_quadrature(self):
        oracle, _ = quad(lambda t: math.exp(t * t), 0.0, 1.0, limit=200)
        mu = ms.mu_alpha(2.0, grid=(-8.0, 8.0, 128001))
        assert ms.hardy_weight(mu, 1.0) == pytest.approx(oracle, rel=1e-8)

    def test_nondecreasing(self, mu2):
        xs = np.linspace(-5.5, 5.5, 81)
        vals = [ms.hardy_weight(mu2, x) for x in xs]
        assert np.all(np.diff(vals) >= 0)

    def test_no_overflow_inside_default_domains(self, mu2):
        # e^{x^2} at x = 8 is ~ 6e27: representable thanks to log-space sums
        assert math.isfinite(ms.hardy_weight(mu2, 7.9))


class TestPerturb:
    def test_constant_log_density_is_identity(self, mu2_coarse):
        new, pert = ms.perturb(mu2_coarse, lambda x: np.full_like(x, 1.7))
        assert pert.delta_u == 0.0
        assert np.allclose(new.weights, mu2_coarse.weights, rtol=1e-12, atol=1e-16)

    def test_sine_perturbation(self, mu2_coarse):
        new, pert = ms.perturb(mu2_coarse, lambda x: 0.3 * np.sin(x))
        assert pert.delta_u == pytest.approx(0.6, abs=1e-4)
        assert new.weights.sum() == pytest.approx(1.0, abs=1e-13)

    def test_step_perturbation(self, mu2_coarse):
        h = 0.8
        new, pert = ms.perturb(mu2_coarse, lambda x: np.where(x > 0, h, 0.0))
        assert pert.delta_u == pytest.approx(h, abs=1e-14)

    def test_infinite_rejected(self, mu2_coarse):
        with pytest.raises(ms.MeasureError):
            ms.perturb(mu2_coarse, lambda x: np.where(x > 7.9, np.inf, 0.0))


class TestRefinement:
    def test_second_order_convergence_hardy(self):
        # halving the step shrinks hardy-weight errors by about 4 (the Z of a
        # decaying density is spectrally accurate, so probe the curved e^{V})
        oracle, _ = quad(lambda t: math.exp(t * t), 0.0, 1.0, limit=200)
        errs = []
        for n in (2001, 4001, 8001):
            mu = ms.mu_alpha(2.0, grid=(-8.0, 8.0, n))
            errs.append(abs(ms.hardy_weight(mu, 1.0) - oracle))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)

    def test_kinked_potential_superquadratic(self):
        # |x|^1.5 has a kink: errors still shrink at least quadratically
        z_oracle, _ = quad(lambda t: math.exp(-abs(t) ** 1.5), -13, 13, limit=200)
        errs = []
        for n in (1001, 2001):
            mu = ms.from_potential(lambda x: np.abs(x) ** 1.5, (-13.0, 13.0, n))
            errs.append(abs(math.exp(mu.log_z) - z_oracle))
        assert errs[0] / errs[1] >= 3.8

    def test_tail_and_median_stable_under_halving(self, mu15_coarse):
        fine = ms.mu_alpha(1.5, grid=(-13.0, 13.0, 4001))
        assert ms.median_point(fine) == pytest.approx(
            ms.median_point(mu15_coarse), abs=0.01
        )
        for x in (0.5, 2.0):
            assert ms.tail_mass(fine, x) == pytest.approx(
                ms.tail_mass(mu15_coarse, x), rel=2e-4
            )


class TestSerialization:
    def test_csv_roundtrip(self, tmp_path, mu2_coarse):
        path = tmp_path / "mu.csv"
        ms.to_csv(mu2_coarse, path)
        back = ms.from_csv(path)
        assert np.allclose(back.nodes, mu2_coarse.nodes)
        assert np.allclose(back.weights, mu2_coarse.weights, rtol=1e-15)
        assert np.allclose(back.potential, mu2_coarse.potential)
