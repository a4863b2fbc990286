import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from miso_outage import analytic, ospa, specfun
from miso_outage.errors import ConfigError, DomainError
from miso_outage.model import Lambda, SystemConfig, mu_of_rho
from miso_outage.montecarlo import McConfig, simulate_conditional

from .conftest import SEED

# mpmath quadrature of the convolution integral at 30 digits
POUT_GL_PINNED = 0.09591066743964877


def beta_of(M, R, P, rho):
    return math.expm1(R) / P * (mu_of_rho(rho) + 1.0)


class TestConditionalOutage:
    @pytest.mark.parametrize("M", [2, 3, 4])
    @pytest.mark.parametrize("gamma", [0.0, 0.7, 3.0])
    def test_endpoints(self, M, gamma):
        R, P, rho = 2.0, 20.0, 0.8
        assert ospa.pout_gamma_lambda(M, R, P, rho, gamma, 1.0) == pytest.approx(
            float(analytic.pout_bfic_given_gamma(M, R, P, rho, gamma)), rel=1e-12
        )
        delta = 2 * mu_of_rho(rho) * gamma
        want = specfun.ncx2_cdf(2 * M, delta, 2 * M * beta_of(M, R, P, rho))
        assert ospa.pout_gamma_lambda(M, R, P, rho, gamma, 1.0 / M) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("M", [2, 4])
    def test_integral_continuous_at_endpoints(self, M):
        R, P, rho, g = 2.0, 20.0, 0.8, 1.5
        for lam, near in ((1.0, 1.0 - 1e-7), (1.0 / M, 1.0 / M + 1e-7)):
            a = ospa.pout_gamma_lambda(M, R, P, rho, g, lam)
            b = ospa.pout_gamma_lambda(M, R, P, rho, g, near)
            assert a == pytest.approx(b, abs=1e-5)

    def test_pinned(self):
        got = ospa.pout_gamma_lambda(2, 2.0, 10.0, 0.9, 2.0, 0.7)
        assert got == pytest.approx(POUT_GL_PINNED, rel=1e-10)

    def test_pinned_by_simulation(self):
        est = simulate_conditional(2.0, Lambda(0.7), 2, 2.0, 10.0, 0.9, McConfig(10**6, SEED))
        assert est.agrees(POUT_GL_PINNED)

    def test_bad_lambda(self):
        for lam in (0.3, 1.2):
            with pytest.raises(DomainError):
                ospa.pout_gamma_lambda(2, 2.0, 10.0, 0.9, 1.0, lam)
        with pytest.raises(DomainError):
            ospa.pout_gamma_lambda(1, 2.0, 10.0, 0.9, 1.0, 1.0)
        with pytest.raises(DomainError):
            ospa.pout_gamma_lambda(2, 2.0, 10.0, 0.9, -1.0, 1.0)

    @pytest.mark.parametrize("M", [2, 4])
    def test_lipschitz_in_lambda(self, M):
        lams = np.linspace(1.0 / M, 1.0, 201)
        for P, g in ((10.0, 0.5), (100.0, 2.0), (1000.0, 5.0)):
            vals = np.array([ospa.pout_gamma_lambda(M, 2.0, P, 0.9, g, x) for x in lams])
            slopes = np.abs(np.diff(vals)) / np.diff(lams)
            # a jump would show up as a slope far above the typical one
            assert slopes.max() <= 20.0 * max(np.median(slopes), 1e-3)

    @given(st.integers(2, 4), st.floats(0, 10), st.floats(0, 1), st.floats(0, 30))
    def test_is_probability(self, M, gamma, t, snr_db):
        lam = 1.0 / M + t * (1.0 - 1.0 / M)
        v = ospa.pout_gamma_lambda(M, 2.0, 10 ** (snr_db / 10), 0.9, gamma, lam)
        assert 0.0 <= v <= 1.0


class TestLambdaOpt:
    @pytest.mark.parametrize("M", [2, 4])
    @pytest.mark.parametrize("rho", [0.3, 0.9, 0.99])
    def test_zero_gamma(self, M, rho):
        # the symmetric allocation wins at gamma = 0 once outage is small
        assert ospa.lambda_opt(M, 2.0, 1e3, rho, 0.0) == pytest.approx(1.0 / M, abs=1e-3)

    @pytest.mark.parametrize("M", [2, 4])
    def test_large_delta(self, M):
        rho = 0.9
        gamma = 200.0 / (2 * mu_of_rho(rho))
        assert ospa.lambda_opt(M, 2.0, 10.0, rho, gamma) > 0.99

    def test_curve_rises(self):
        lams = [ospa.lambda_opt(2, 2.0, 100.0, 0.9, g) for g in (0.0, 0.2, 0.5, 1.0, 2.0, 4.0, 10.0)]
        assert lams[0] == pytest.approx(0.5, abs=1e-3)
        assert all(a < b for a, b in zip(lams, lams[1:]))
        assert lams[-1] > 0.8

    @pytest.mark.parametrize("gamma", [0.2, 1.0, 3.0])
    def test_against_dense_scan(self, gamma):
        M, R, P, rho = 2, 2.0, 100.0, 0.9
        lams = np.linspace(0.5, 1.0, 2001)
        vals = np.array([ospa.pout_gamma_lambda(M, R, P, rho, gamma, x) for x in lams])
        lam = ospa.lambda_opt(M, R, P, rho, gamma)
        assert ospa.pout_gamma_lambda(M, R, P, rho, gamma, lam) <= vals.min() * (1 + 1e-9)
        assert lam == pytest.approx(lams[np.argmin(vals)], abs=1e-3)

    @given(st.integers(2, 4), st.floats(0, 20), st.floats(0, 30), st.floats(0.1, 0.99))
    def test_dominates_fixed_allocations(self, M, gamma, snr_db, rho):
        P = 10 ** (snr_db / 10)
        lam = ospa.lambda_opt(M, 2.0, P, rho, gamma)
        assert 1.0 / M <= lam <= 1.0
        opt = ospa.pout_gamma_lambda(M, 2.0, P, rho, gamma, lam)
        ends = min(ospa.pout_gamma_lambda(M, 2.0, P, rho, gamma, x) for x in (1.0 / M, 1.0))
        assert opt <= ends + 1e-15


class TestResidual:
    def test_vanishes_at_interior_optimum(self):
        M, R, P, rho, g = 2, 2.0, 100.0, 0.9, 1.0
        lam = ospa.lambda_opt(M, R, P, rho, g, tol=1e-9)
        assert 0.5 < lam < 1.0
        value, scale = ospa.stationarity_residual(M, R, P, rho, g, lam, return_scale=True)
        assert abs(value) <= 1e-4 * scale

    def test_sign_change_across_optimum(self):
        M, R, P, rho, g = 2, 2.0, 100.0, 0.9, 1.0
        lam = ospa.lambda_opt(M, R, P, rho, g)
        assert ospa.stationarity_residual(M, R, P, rho, g, lam - 0.05) < 0
        assert ospa.stationarity_residual(M, R, P, rho, g, lam + 0.05) > 0

    def test_dense_scan_sign_change(self):
        M, R, P, rho, g = 2, 2.0, 100.0, 0.9, 1.0
        lams = np.linspace(0.52, 0.98, 47)
        res = np.array([ospa.stationarity_residual(M, R, P, rho, g, x) for x in lams])
        flips = np.flatnonzero(np.diff(np.sign(res)))
        assert flips.size == 1
        lam = ospa.lambda_opt(M, R, P, rho, g)
        assert lams[flips[0]] <= lam <= lams[flips[0] + 1]

    def test_zero_gamma_prefers_symmetric(self):
        assert ospa.stationarity_residual(2, 2.0, 100.0, 0.9, 0.0, 0.501) > 0

    def test_sign_matches_finite_difference(self):
        M, R, P, rho = 3, 2.0, 100.0, 0.9
        for g, lam in ((0.5, 0.5), (2.0, 0.6), (5.0, 0.9)):
            h = 1e-5
            d = ospa.pout_gamma_lambda(M, R, P, rho, g, lam + h) - ospa.pout_gamma_lambda(M, R, P, rho, g, lam - h)
            r = ospa.stationarity_residual(M, R, P, rho, g, lam)
            assert np.sign(r) == np.sign(d)

    def test_boundaries_rejected(self):
        for lam in (0.5, 1.0):
            with pytest.raises(DomainError):
                ospa.stationarity_residual(2, 2.0, 10.0, 0.9, 1.0, lam)


class TestPolicy:
    def test_csv_round_trip(self, tmp_path):
        cfg = SystemConfig(2, 2.0, 100.0, 0.9)
        pol = ospa.SpatialPolicy(np.array([0.0, 1.0, 3.0]), np.array([0.5, 0.65, 0.8]), cfg)
        path = tmp_path / "p.csv"
        pol.to_csv(path)
        assert path.read_text().splitlines()[0] == "gamma,lambda_opt"
        back = ospa.SpatialPolicy.from_csv(path, cfg)
        np.testing.assert_array_equal(back.gamma_grid, pol.gamma_grid)
        np.testing.assert_array_equal(back.lambda_values, pol.lambda_values)

    def test_interpolation_clamps(self):
        cfg = SystemConfig(2, 2.0, 100.0, 0.9)
        pol = ospa.SpatialPolicy(np.array([0.0, 2.0]), np.array([0.5, 0.9]), cfg)
        assert pol(1.0) == pytest.approx(0.7)
        assert pol(50.0) == pytest.approx(0.9)

    def test_validation(self, tmp_path):
        cfg = SystemConfig(2, 2.0, 100.0, 0.9)
        with pytest.raises(ConfigError):
            ospa.SpatialPolicy(np.array([0.0, 1.0]), np.array([0.3, 0.9]), cfg)
        with pytest.raises(ConfigError):
            ospa.SpatialPolicy(np.array([1.0, 0.0]), np.array([0.6, 0.9]), cfg)
        bad = tmp_path / "bad.csv"
        bad.write_text("gamma,p\n0,1\n")
        with pytest.raises(ConfigError):
            ospa.SpatialPolicy.from_csv(bad, cfg)


class TestOspa:
    @pytest.mark.parametrize(
        "snr_db",
        [
            10.0,
            pytest.param(
                20.0,
                marks=pytest.mark.xfail(
                    strict=True, reason="at low outage lambda_opt is still ~0.89 at delta = 200 and reaches 0.99 only near delta ~ 2000"
                ),
            ),
        ],
    )
    def test_policy_endpoints(self, snr_db):
        res = ospa.pout_ospa(2, 2.0, 10 ** (snr_db / 10), 0.9)
        pol = res.policy
        assert pol.gamma_grid[0] == 0.0
        far = pol.gamma_grid >= ospa.DELTA_TAIL / (2 * mu_of_rho(0.9)) * (1 - 1e-12)
        assert far.any()
        assert np.all(pol.lambda_values[far] > 0.99)

    def test_policy_starts_symmetric(self):
        pol = ospa.pout_ospa(2, 2.0, 100.0, 0.9).policy
        assert pol.gamma_grid[0] == 0.0
        assert pol.lambda_values[0] == pytest.approx(0.5, abs=1e-3)

    @pytest.mark.parametrize("snr_db", [15.0, 20.0, 30.0])
    def test_zero_correlation_is_uspa(self, snr_db):
        P = 10 ** (snr_db / 10)
        assert ospa.pout_ospa(2, 2.0, P, 0.0).pout == pytest.approx(float(analytic.pout_uspa(2, 2.0, P)), abs=1e-6)

    @pytest.mark.xfail(strict=True, reason="near-certain outage: concentrating power beats the equal split even at rho = 0")
    def test_zero_correlation_is_uspa_at_low_snr(self):
        P = 1.0
        assert ospa.pout_ospa(2, 2.0, P, 0.0).pout == pytest.approx(float(analytic.pout_uspa(2, 2.0, P)), abs=1e-6)

    def test_high_correlation_approaches_perfect(self):
        P = 100.0
        perfect = float(analytic.pout_bf_perfect(2, 2.0, P))
        gaps = [abs(ospa.pout_ospa(2, 2.0, P, r).pout - perfect) for r in (0.9, 0.99, 0.999, 0.9999)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 0.1 * gaps[0]

    def test_sandwich(self):
        for snr in range(0, 21, 2):
            P = 10 ** (snr / 10)
            v = ospa.pout_ospa(2, 2.0, P, 0.9).pout
            bound = min(float(analytic.pout_uspa(2, 2.0, P)), float(analytic.pout_bfic(2, 2.0, P, 0.9)))
            assert v <= bound + 1e-6

    def test_average_of_policy(self):
        # re-averaging the tabulated optimum reproduces the reported value
        M, R, P, rho = 2, 2.0, 100.0, 0.9
        res = ospa.pout_ospa(M, R, P, rho)
        g = lambda x: ospa.pout_gamma_lambda(M, R, P, rho, x, ospa.lambda_opt(M, R, P, rho, x))
        cuts = ospa.ospa_breakpoints(M, mu_of_rho(rho), beta_of(M, R, P, rho))
        direct = specfun.gamma_expectation(M, g, 1e-8, breakpoints=cuts)
        assert res.pout == pytest.approx(direct, rel=1e-5)
