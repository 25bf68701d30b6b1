import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyfk import (
    BoundaryTerm,
    GammaDensity,
    Hamiltonian,
    Lagrangian,
    LevyModel,
    RangeError,
    RateFunction,
    TwoPoint,
    action_value,
    el_residual,
    harmonic_closed_form,
    legendre_l0,
    probe_local_minimality,
    solve_el_config,
    solve_el_jump,
    solve_el_momentum,
)


def two_point_closed(u, alpha=1.0):
    r = u / alpha
    return r * math.asinh(r) + 1 - math.sqrt(1 + r * r)


class TestLegendre:
    def test_zero_slope(self):
        for L in (Lagrangian.gaussian(), Lagrangian.two_point(), Lagrangian(LevyModel(sigma2=1.0, jumps=TwoPoint(2.0)))):
            res = legendre_l0(L, 0.0)
            assert res.value == pytest.approx(0.0, abs=1e-12)
            assert res.argmax == pytest.approx(0.0, abs=1e-12)

    def test_two_point_value(self):
        assert Lagrangian.two_point(1.0)(1.0) == pytest.approx(0.467160, abs=1e-6)

    def test_numeric_matches_closed_form(self):
        u = np.linspace(-10, 10, 401)
        numeric = Lagrangian(Hamiltonian.two_point(1.0), "numeric")
        assert np.max(np.abs(numeric(u) - Lagrangian.two_point(1.0)(u))) <= 1e-8

    def test_gaussian_with_drift(self):
        L = Lagrangian.gaussian(sigma2=2.0, b=0.5)
        u = np.linspace(-3, 3, 13)
        assert np.allclose(L(u), (u - 0.5) ** 2 / 4.0)

    def test_derivative_is_argmax(self):
        L = Lagrangian.two_point(0.7)
        u = np.array([-2.0, 0.3, 1.5])
        assert np.allclose(L.derivative(u), np.arcsinh(u / 0.7) / 0.7)

    def test_gamma_subordinator(self):
        # H0(x) = -ln(1 - x), so L0(u) = u - 1 - ln u for u > 0 and +inf otherwise
        L = Lagrangian(LevyModel(jumps=GammaDensity()))
        u = np.array([0.5, 1.0, 2.0, 5.0])
        assert np.allclose(L(u), u - 1 - np.log(u), atol=1e-3)
        assert np.all(L.argmax(u) < 1)
        assert L(-0.1) == math.inf and L(0.0) == math.inf

    def test_out_of_range_exponent(self):
        H = Hamiltonian(LevyModel(jumps=GammaDensity()))
        with pytest.raises(RangeError):
            H.h0(1.5)

    @settings(max_examples=60, deadline=None)
    @given(u=st.floats(-20, 20), x=st.floats(-3, 3))
    def test_fenchel_young(self, u, x):
        H = Hamiltonian.two_point(1.0)
        L = Lagrangian(H)
        assert L(u) + H.h0(x) >= u * x - 1e-9

    @settings(max_examples=25, deadline=None)
    @given(x=st.floats(-2.5, 2.5))
    def test_involution(self, x):
        # H0(x) = sup_u (u x - L0(u)); maximiser is u = H0'(x)
        H = Hamiltonian(LevyModel(sigma2=0.5, jumps=TwoPoint(1.0, 0.8)))
        L = Lagrangian(H)
        u = float(H.h0p(x))
        grid = u + np.linspace(-1, 1, 2001)
        dual = np.max(grid * x - L(grid))
        assert dual == pytest.approx(float(H.h0(x)), abs=1e-6)


class TestAction:
    def test_zero_path(self):
        s = np.linspace(0, 1, 11)
        assert action_value(Lagrangian.gaussian(), RateFunction.quadratic(0.5), s, 0 * s, 0.0, BoundaryTerm.none()) == 0

    @pytest.mark.parametrize("t", [0.0, 0.4])
    def test_jump_constant_path(self, t):
        s = np.linspace(t, 1, 51)
        val = action_value(Lagrangian.two_point(), RateFunction.quadratic_minus_linear(0.0), s, 0 * s, 0.5,
                           BoundaryTerm.constant(1.0))
        assert val == pytest.approx(-0.25 * (1 - t) + 1)

    def test_matches_solver(self):
        res = solve_el_config(RateFunction.quadratic(0.5), 0.8, 0.7, 0.5)
        val = action_value(Lagrangian.gaussian(), res.rate, res.s, res.phi, res.p, res.boundary_term)
        assert val == pytest.approx(res.total, abs=1e-6)


class TestConfig:
    def test_symmetric_point(self):
        res = solve_el_config(RateFunction.quadratic(0.5), 0.0, 1.0, 1.0)
        assert np.max(np.abs(res.phi)) == 0 and res.G == 0 and res.total == 0

    def test_hyperbolic_value(self):
        res = solve_el_config(RateFunction.quadratic(0.5), 1.0, 1.0, 1.0)
        exact = (math.sinh(1) + 2 * math.cosh(1)) / (math.cosh(1) + 2 * math.sinh(1))
        assert res.G == pytest.approx(exact, abs=1e-9)
        assert res.G == pytest.approx(1.0944859, abs=1e-7)

    def test_random_endpoints_match_closed_form(self):
        rng = np.random.default_rng(11)
        for q, t in zip(rng.uniform(-2, 2, 10), rng.uniform(0.2, 2, 10)):
            res = solve_el_config(RateFunction.quadratic(0.5), q, t, 0.5)
            assert res.closed_form_error <= 1e-6

    def test_linear_term_in_potential(self):
        V = RateFunction.polynomial([0.0, 0.3, 1.0])
        res = solve_el_config(V, 0.5, 0.8, 1.0)
        phi, _ = harmonic_closed_form(2.0, 0.3, 0.5, 0.8, 1.0, res.s)
        assert np.max(np.abs(phi - res.phi)) <= 1e-6

    def test_energy_and_residual(self):
        res = solve_el_config(RateFunction.polynomial([0, 0, 0.5, 0, 0.1]), 1.0, 0.5, 0.5)
        assert np.ptp(res.energy) < 1e-9
        assert el_residual(res) < 1e-4
        assert res.residual <= 1e-10


class TestMomentum:
    def test_zero(self):
        res = solve_el_momentum(Lagrangian.gaussian(), 0.0, 0.5, 0.5)
        assert np.all(res.phi == 0) and res.G == 0

    def test_self_dual(self):
        a = solve_el_momentum(Lagrangian.gaussian(), 1.0, 0.5, 0.5)
        b = solve_el_config(RateFunction.quadratic(0.5), 1.0, 0.5, 0.5)
        assert np.max(np.abs(a.phi - b.phi)) <= 1e-8

    def test_two_point(self):
        L = Lagrangian.two_point(1.0)
        res = solve_el_momentum(L, 0.3, 0.5, 0.5)
        assert res.residual <= 1e-8
        assert res.action >= 0
        assert res.total >= 0.5 * min(0.0, np.min(res.phi + 0.3)) ** 2 * 0.5
        bound = abs(0.3) + abs(res.phi[-1]) + np.trapezoid(np.abs(res.phi + 0.3), res.s)
        assert abs(res.G) <= bound


class TestJump:
    def test_trivial_minimizer(self):
        res = solve_el_jump(1.0, 0.5, 0.0)
        assert np.all(res.phi == 0)
        assert np.all(res.rho == 0)
        assert np.allclose(np.cosh(res.rho), 1.0)
        assert res.total == pytest.approx(0.75)

    def test_nontrivial_minimizer_is_local_minimum(self):
        res = solve_el_jump(1.0, 0.6, 0.0)
        assert res.residual <= 1e-8
        report = probe_local_minimality(res, n_probes=20, eps=1e-3, seed=1)
        assert report.passed, report.min_delta

    @pytest.mark.parametrize("alpha", [0.5, 2.0])
    def test_second_order_form(self, alpha):
        # z'' = alpha (2(z + p) - 1) sqrt(z'^2 + alpha^2)
        res = solve_el_jump(alpha, 0.8, 0.2)
        d1 = np.gradient(res.phi, res.s, edge_order=2)
        d2 = np.gradient(d1, res.s, edge_order=2)
        rhs = alpha * (2 * (res.phi + 0.8) - 1) * np.sqrt(d1**2 + alpha**2)
        assert np.max(np.abs(d2 - rhs)[5:-5]) < 1e-4
        assert abs(res.dphi[-1]) < 1e-8

    def test_rejects_bad_alpha(self):
        from levyfk import ConfigError

        with pytest.raises(ConfigError):
            solve_el_jump(0.0, 0.5)
