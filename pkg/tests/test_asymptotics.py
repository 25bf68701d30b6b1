import math

import pytest

import levyfk.asymptotics as asym
from levyfk import (
    LevyModel,
    MCParams,
    RateFunction,
    SolverError,
    drift_prediction_config,
    drift_prediction_momentum,
    gaussian_k0,
    gaussian_k1bar,
    hbar_sweep,
    jump_prefactor_mc,
    predicted_prefactor,
    prefactor_F,
    prefactor_mc,
    quadratic_functional_mc,
    riccati_prefactor,
    solve_el_config,
    solve_el_jump,
)
from levyfk.verification import harmonic_spec, jump_spec


class TestPrefactor:
    def test_endpoints(self):
        assert prefactor_F(1.0).K == pytest.approx(1.0)
        assert prefactor_F(0.0, "backward").K == pytest.approx(1.0)

    @pytest.mark.parametrize("t", [0.0, 0.25, 0.5, 0.75])
    def test_ode_matches_closed_form(self, t):
        for direction in ("forward", "backward"):
            v = prefactor_F(t, direction)
            assert v.discrepancy <= 1e-10

    def test_forward_half(self):
        assert prefactor_F(0.5).K == pytest.approx(0.678873, abs=1e-6)

    def test_rejects_outside_unit_interval(self):
        with pytest.raises(ValueError):
            prefactor_F(1.5)

    def test_mc_agrees(self):
        est = prefactor_mc(0.5, MCParams(20_000, 1e-3, seed=1))
        assert est.within(prefactor_F(0.5).K, 3.0)


class TestGaussianFunctionals:
    def test_constant_profile_identity(self):
        # E[exp(-1/2 int_0^t W^2 - 1/2 W_t^2)] = exp(-t/2)
        est = quadratic_functional_mc(1.0, 1.0, 1.0, MCParams(20_000, 1e-3, seed=2))
        assert est.within(math.exp(-0.5), 3.0)

    def test_riccati_matches_closed_forms(self):
        assert riccati_prefactor(1.0, 1.0, 1.0, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-8)
        assert riccati_prefactor(1.0, 1.0, 2.0, 0.5) == pytest.approx(prefactor_F(0.5).K, abs=1e-8)

    def test_k0_empty_interval(self):
        V = RateFunction.quadratic(0.5)
        res = solve_el_config(V, 1.0, 0.5, 0.5)
        assert gaussian_k0(V, res, 1.0, 0.0).mean == 1.0

    def test_k0_quadratic(self):
        V = RateFunction.quadratic(0.5)
        res = solve_el_config(V, 1.0, 1.0, 0.5)
        est = gaussian_k0(V, res, 1.0, 1.0, MCParams(20_000, 1e-3, seed=3))
        assert est.within(math.exp(-0.5), 3.0)

    def test_predicted_prefactor_uses_minimizer(self):
        res = solve_el_config(RateFunction.quadratic(0.5), 0.4, 1.0, 1.0)
        # V'' = 1 and kappa = 1 give (cosh 1 + 2 sinh 1)^{-1/2}, whatever the endpoint
        assert predicted_prefactor(res) == pytest.approx(prefactor_F(1.0, "backward").K, abs=1e-8)


class TestCorrection:
    def test_quadratic_is_exactly_zero(self):
        V = RateFunction.quadratic(0.5)
        res = solve_el_config(V, 1.0, 0.5, 0.5)
        est = gaussian_k1bar(V, res, 1.0, 0.5, MCParams(2000, 1e-2, seed=1))
        assert est.k1.mean == 0.0 and est.ratio == 0.0

    def test_quartic_stderr_scaling(self):
        V = RateFunction.polynomial([0, 0, 0.5, 0, 0.1])
        res = solve_el_config(V, 1.0, 0.5, 0.5)
        small = gaussian_k1bar(V, res, 1.0, 0.5, MCParams(4000, 1e-2, seed=5))
        large = gaussian_k1bar(V, res, 1.0, 0.5, MCParams(8000, 1e-2, seed=6))
        assert math.isfinite(small.ratio)
        assert small.ratio_stderr / large.ratio_stderr == pytest.approx(math.sqrt(2), rel=0.2)

    def test_symmetric_quartic(self):
        V = RateFunction.polynomial([0, 0, 0.5, 0, 0.1])
        res = solve_el_config(V, 0.0, 0.5, 0.5)
        est = gaussian_k1bar(V, res, 0.0, 0.5, MCParams(8000, 1e-2, seed=7))
        assert abs(est.ratio) <= 3 * est.ratio_stderr + 1e-12


class TestDrift:
    def test_symmetric_point(self):
        assert drift_prediction_config(RateFunction.quadratic(0.5), 0.0, 1.0).leading == 0.0

    def test_quadratic_leading(self):
        pred = drift_prediction_config(RateFunction.quadratic(0.5), 1.0, 1.0, 0.5)
        # transversality phi'(1) = -(phi(1) + 1): solve the 2x2 hyperbolic system
        B = -(math.sinh(1) + math.cosh(1)) / (math.cosh(1) + math.sinh(1))
        assert pred.leading == pytest.approx(B, abs=1e-9)
        assert pred.correction_coeff == 0.0

    def test_momentum_self_dual(self):
        a = drift_prediction_momentum(LevyModel(sigma2=1.0), 1.0, 0.5)
        b = drift_prediction_config(RateFunction.quadratic(0.5), 1.0, 0.5)
        assert a.leading == pytest.approx(b.leading, abs=1e-8)
        assert drift_prediction_momentum(LevyModel(sigma2=1.0), 0.0, 0.5).leading == 0.0


class TestJumpPrefactor:
    def test_trivial_minimizer(self):
        # rho = 0 gives E[exp(-alpha^2 int_0^1 W^2)] = cosh(sqrt(2) alpha)^{-1/2}
        res = solve_el_jump(1.0, 0.5, 0.0)
        est = jump_prefactor_mc(1.0, res, MCParams(20_000, 1e-3, seed=8))
        assert est.within(math.cosh(math.sqrt(2)) ** -0.5, 3.0)


class TestSweep:
    def test_reversed_ladder(self):
        with pytest.raises(ValueError):
            hbar_sweep(harmonic_spec(), 0.4, 0.5, hbars=(0.025, 0.05, 0.1, 0.2))

    def test_short_ladder(self):
        with pytest.raises(ValueError):
            hbar_sweep(harmonic_spec(), 0.4, 0.5, hbars=(0.2, 0.1, 0.05))

    def test_jump_leading_order(self):
        rep = hbar_sweep(jump_spec(1.0), 0.5, 0.0, hbars=(0.4, 0.2, 0.1, 0.05))
        assert rep.complete
        assert rep.A_pred == pytest.approx(0.75)
        assert rep.A_fit == pytest.approx(0.75, rel=0.02)

    def test_failed_hbar_marks_report_incomplete(self, monkeypatch):
        real = asym.solve_pide_scaled

        def flaky(spec, hbar, *args, **kw):
            if hbar == 0.1:
                raise SolverError("forced failure")
            return real(spec, hbar, *args, **kw)

        monkeypatch.setattr(asym, "solve_pide_scaled", flaky)
        rep = hbar_sweep(harmonic_spec(), 0.4, 0.5, hbars=(0.4, 0.3, 0.2, 0.1, 0.05))
        assert not rep.complete
        assert 0.1 in rep.failures and 0.1 not in rep.hbars
        assert len(rep.rows()) == 4
