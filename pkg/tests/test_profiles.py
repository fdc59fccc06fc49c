"""Standing wave and transport coefficient tests.

Oracles, all computed independently of the code under test:
  linear-cubic kink:      U₀(z) = tanh(z/√2)
  linear coefficients:    λ₀ = 1, σ_AC = 2√2/3, μ_AC = 3/(2√2)
  ∫ U₀'² dz (linear):     2√2/3 (analytic sech⁴ integral)
  cubic-flux λ₀:          1.2101271481360336   (composite Gauss-Legendre,
                          4000 panels × order 16, converged to 1e-16)
  quintic-reaction λ₀:    1.2159260400136864   (same rule)
"""

import math

import numpy as np
import pytest

from phaselab import model as m
from phaselab import profiles as pf

LAMBDA0_CUBIC = 1.2101271481360336
LAMBDA0_QUINTIC = 1.2159260400136864
SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def linear():
    return m.linear_cubic()


@pytest.fixture(scope="module")
def cubic():
    return m.cubic_flux()


@pytest.fixture(scope="module")
def linear_wave(linear):
    return pf.compute_standing_wave(linear)


@pytest.fixture(scope="module")
def cubic_wave(cubic):
    return pf.compute_standing_wave(cubic)


class TestStandingWave:
    def test_linear_matches_tanh_kink(self, linear_wave):
        mask = np.abs(linear_wave.z_grid) <= 10.0
        want = np.tanh(linear_wave.z_grid[mask] / SQRT2)
        err = np.max(np.abs(linear_wave.u0[mask] - want))
        assert err <= 1e-6

    def test_normalization_at_zero(self, linear_wave, cubic_wave, linear, cubic):
        for wave, mod in ((linear_wave, linear), (cubic_wave, cubic)):
            center = wave.z_grid.size // 2
            assert wave.z_grid[center] == 0.0
            assert wave.u0[center] == mod.alpha

    def test_strictly_increasing_with_positive_derivative(self, cubic_wave):
        assert (np.diff(cubic_wave.u0) > 0).all()
        assert (cubic_wave.u0_z > 0).all()

    def test_ode_residual_small_and_second_order(self, cubic, cubic_wave):
        res = pf.standing_wave_residual(cubic_wave, cubic)
        assert res <= 1e-5
        finer = pf.compute_standing_wave(cubic, dz=cubic_wave.dz / 2.0)
        res_fine = pf.standing_wave_residual(finer, cubic)
        assert res / res_fine >= 3.5

    def test_tail_decay_rate_matches_linearization(self, linear_wave, cubic_wave):
        # linearized rates: sqrt(-f'(a+)/phi'(a+)) = sqrt(2) resp. 1
        assert linear_wave.lambda1 == pytest.approx(SQRT2, rel=5e-2)
        assert cubic_wave.lambda1 == pytest.approx(1.0, rel=5e-2)
        assert linear_wave.tail_fit_r2 >= 0.999
        assert cubic_wave.tail_fit_r2 >= 0.999

    def test_tail_envelope_bound(self, cubic_wave):
        n = cubic_wave.z_grid.size
        outer = np.abs(cubic_wave.z_grid) >= 0.9 * cubic_wave.half_width
        assert outer.sum() >= 0.09 * n
        bound = cubic_wave.tail_amplitude * np.exp(
            -cubic_wave.lambda1 * np.abs(cubic_wave.z_grid[outer]))
        assert (cubic_wave.u0_z[outer] <= bound * (1 + 1e-12)).all()

    def test_grid_preconditions_enforced(self, linear):
        with pytest.raises(ValueError):
            pf.compute_standing_wave(linear, half_width=5.0)
        with pytest.raises(ValueError):
            pf.compute_standing_wave(linear, dz=0.5)

    def test_inverse_lookup(self, linear_wave):
        z95 = linear_wave.inverse(0.95)
        assert z95 == pytest.approx(SQRT2 * np.arctanh(0.95), abs=1e-5)


class TestLambda0:
    def test_linear_recovers_unity(self, linear):
        lam, err = pf.compute_lambda0(linear)
        assert abs(lam - 1.0) <= 1e-8
        assert err <= 1e-9

    def test_pure_scaling_of_flux(self):
        lam, _ = pf.compute_lambda0(m.scaled_linear(2.5))
        assert lam == pytest.approx(2.5, abs=1e-8)

    def test_cubic_flux_frozen_oracle(self, cubic):
        lam, err = pf.compute_lambda0(cubic)
        assert lam == pytest.approx(LAMBDA0_CUBIC, abs=1e-8)

    def test_quintic_frozen_oracle(self):
        lam, _ = pf.compute_lambda0(m.quintic_reaction())
        assert lam == pytest.approx(LAMBDA0_QUINTIC, abs=1e-8)

    def test_profile_route_linear_is_ratio_of_identical_integrals(
            self, linear, linear_wave):
        assert pf.compute_lambda0_profile(linear_wave, linear) == pytest.approx(
            1.0, abs=1e-9)

    def test_profile_derivative_integral_oracle(self, linear, linear_wave):
        # int U0'^2 dz = 2*sqrt(2)/3 for the tanh kink
        val = float(np.trapezoid(linear_wave.u0_z ** 2, dx=linear_wave.dz))
        assert val == pytest.approx(2.0 * SQRT2 / 3.0, abs=1e-7)

    @pytest.mark.parametrize("name", sorted(m.MODEL_REGISTRY))
    def test_cross_formula_agreement(self, name):
        mod = m.MODEL_REGISTRY[name]()
        lam, _ = pf.compute_lambda0(mod)
        wave = pf.compute_standing_wave(mod)
        lam_alt = pf.compute_lambda0_profile(wave, mod)
        assert abs(lam - lam_alt) <= 1e-5


class TestMobilitySurfaceTension:
    def test_linear_closed_forms(self, linear):
        sig, _ = pf.compute_surface_tension(linear)
        mob, _ = pf.compute_mobility(linear)
        assert sig == pytest.approx(2.0 * SQRT2 / 3.0, abs=1e-9)
        assert mob == pytest.approx(3.0 / (2.0 * SQRT2), abs=1e-9)
        assert mob * sig == pytest.approx(1.0, abs=1e-8)

    def test_scaling_substitution(self):
        # phi = c*id sends W -> c W; the product must still equal lambda0 = c
        c = 3.0
        mod = m.scaled_linear(c)
        sig, _ = pf.compute_surface_tension(mod)
        mob, _ = pf.compute_mobility(mod)
        assert sig == pytest.approx(math.sqrt(2 * c) * 2 / 3, abs=1e-8)
        assert mob == pytest.approx(1.5 * math.sqrt(c / 2), abs=1e-8)
        assert mob * sig == pytest.approx(c, abs=1e-7)

    @pytest.mark.parametrize("name", sorted(m.MODEL_REGISTRY))
    def test_factorization_identity(self, name):
        coeffs = pf.transport_coefficients(m.MODEL_REGISTRY[name]())
        assert coeffs.identity_residual <= 1e-7
        assert coeffs.identity_residual <= coeffs.err_estimates["identity"] + 1e-12
        for value in (coeffs.lambda0, coeffs.mobility,
                      coeffs.surface_tension, coeffs.phi_star):
            assert value > 0


class TestCorrector:
    def test_linear_flux_gives_zero_corrector(self, linear, linear_wave):
        corr = pf.compute_corrector(linear_wave, linear, 1.0, laplacian_d=2.0)
        assert np.max(np.abs(corr.u1)) <= 1e-6

    def test_zero_forcing_gives_zero(self, cubic, cubic_wave):
        lam, _ = pf.compute_lambda0(cubic)
        corr = pf.compute_corrector(cubic_wave, cubic, lam, laplacian_d=0.0)
        assert np.all(corr.u1 == 0.0)

    def test_solvability_residual_by_construction(self, cubic, cubic_wave):
        # residual = lambda0*∫phi'U0'^2 − ∫(phi'U0')^2 = 0 at the true lambda0
        lam, _ = pf.compute_lambda0(cubic)
        corr = pf.compute_corrector(cubic_wave, cubic, lam, laplacian_d=1.0)
        assert abs(corr.solvability_residual) <= 1e-6

    def test_center_normalization_and_boundedness(self, cubic, cubic_wave):
        lam, _ = pf.compute_lambda0(cubic)
        corr = pf.compute_corrector(cubic_wave, cubic, lam, laplacian_d=1.0)
        center = corr.z_grid.size // 2
        assert corr.u1[center] == pytest.approx(0.0, abs=1e-12)
        v1 = cubic.phi_prime(cubic_wave.u0) * corr.u1
        assert np.isfinite(v1).all()
        # bounded transformed corrector, no tail growth
        assert np.max(np.abs(v1)) < 10.0

    def test_stability_under_domain_doubling(self, cubic):
        lam, _ = pf.compute_lambda0(cubic)
        vals = []
        for hw in (22.0, 44.0):
            wave = pf.compute_standing_wave(cubic, half_width=hw, dz=0.002)
            corr = pf.compute_corrector(wave, cubic, lam, laplacian_d=1.0)
            vals.append(np.max(np.abs(cubic.phi_prime(wave.u0) * corr.u1)))
        assert vals[1] == pytest.approx(vals[0], rel=0.05)

    def test_wrong_lambda0_raises(self, cubic, cubic_wave):
        with pytest.raises(pf.CorrectorError):
            pf.compute_corrector(cubic_wave, cubic, 1.3, laplacian_d=1.0)

    def test_corrector_scales_linearly_in_laplacian(self, cubic, cubic_wave):
        lam, _ = pf.compute_lambda0(cubic)
        one = pf.compute_corrector(cubic_wave, cubic, lam, laplacian_d=1.0)
        three = pf.compute_corrector(cubic_wave, cubic, lam, laplacian_d=3.0)
        assert np.allclose(three.u1, 3.0 * one.u1, atol=1e-9)
