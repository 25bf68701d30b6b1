import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyfk import (
    BoundaryTruncationWarning,
    ConfigError,
    FiniteAtomic,
    GammaDensity,
    LevyModel,
    TwoPoint,
    analytic_moment,
    apply_generator,
    characteristic_exponent,
    empirical_moments,
    generator_matrix,
    sample_path,
    simulate_paths,
)
from levyfk._blocks import map_blocks, substream
from levyfk.levy_core import characteristic_exponent_complex, sample_scaled_brownian


class TestMeasures:
    def test_two_point_nodes_and_moments(self):
        tp = TwoPoint(2.0, 3.0)
        k, w = tp.nodes()
        assert sorted(k) == [-2.0, 2.0]
        assert w.sum() == pytest.approx(3.0)
        assert tp.moment(2) == pytest.approx(12.0)
        assert tp.moment(3) == 0.0

    def test_atomic_must_be_symmetric(self):
        with pytest.raises(ConfigError):
            FiniteAtomic(((1.0, 0.5),))
        fa = FiniteAtomic(((1.0, 0.5), (-1.0, 0.5), (2.0, 0.1), (-2.0, 0.1)))
        assert fa.total_mass == pytest.approx(1.2)

    def test_gamma_mass_matches_exponential_integral(self):
        from scipy.special import exp1

        g = GammaDensity()
        assert g.total_mass == pytest.approx(exp1(g.eps) - exp1(g.cutoff), rel=1e-10)
        # second moment int k e^{-k} dk on [eps, cutoff]
        assert g.moment(2) == pytest.approx(1.0, abs=1e-4)

    def test_gamma_requires_subordinator(self):
        with pytest.raises(ConfigError):
            LevyModel(sigma2=1.0, jumps=GammaDensity())
        assert LevyModel(b=0.5, jumps=GammaDensity()).is_subordinator

    def test_gamma_sampler_matches_density(self):
        g = GammaDensity()
        x = g.sample(np.random.default_rng(0), 200_000)
        assert x.min() >= g.eps and x.max() <= g.cutoff
        # mean of the normalised density is int e^{-k} dk / mass
        assert x.mean() == pytest.approx(g.moment(2) / g.total_mass, rel=0.03)

    @pytest.mark.parametrize("bad", [dict(sigma2=-1.0), dict(b=float("nan")), dict(hbar=0.0)])
    def test_model_validation(self, bad):
        with pytest.raises(ConfigError):
            LevyModel(**bad)


class TestExponent:
    def test_brownian(self):
        assert characteristic_exponent(LevyModel(sigma2=2.0), 1.5) == pytest.approx(2.25)

    def test_two_point_is_one_minus_cos(self):
        m = LevyModel(jumps=TwoPoint(1.0))
        assert characteristic_exponent(m, 0.7) == pytest.approx(1 - math.cos(0.7))

    def test_gamma_against_closed_form(self):
        # int (1 - cos(xk)) e^{-k}/k dk over (0, inf) = ln(1 + x^2)/2
        m = LevyModel(jumps=GammaDensity(eps=1e-9, cutoff=60))
        assert characteristic_exponent(m, 1.3) == pytest.approx(0.5 * math.log(1 + 1.69), rel=1e-6)
        # imaginary part: int sin(xk) e^{-k}/k dk = atan(x)
        assert characteristic_exponent_complex(m, 1.3).imag == pytest.approx(math.atan(1.3), rel=1e-6)


class TestGenerator:
    def test_quadratic_under_brownian_with_drift(self):
        m = LevyModel(b=0.3, sigma2=2.0)
        x = np.linspace(-1, 1, 5)
        out = apply_generator(m, lambda y: y**2, x, fd_step=1e-3)
        assert np.allclose(out, 2 * 0.3 * x + 2.0, atol=1e-6)

    def test_two_point_exact_shift(self):
        m = LevyModel(jumps=TwoPoint(0.5))
        x = np.linspace(-2, 2, 9)
        out = apply_generator(m, np.cos, x)
        assert np.allclose(out, np.cos(x) * (math.cos(0.5) - 1))

    def test_matrix_matches_callable(self):
        m = LevyModel(b=0.2, sigma2=1.0, jumps=TwoPoint(0.25))
        grid = np.linspace(-6, 6, 481)
        f = np.exp(-grid**2)
        A = generator_matrix(m, grid, "central")
        inner = slice(40, -40)
        ref = apply_generator(m, lambda y: np.exp(-y**2), grid, fd_step=grid[1] - grid[0])
        assert np.allclose((A @ f)[inner], ref[inner], atol=1e-10)

    def test_truncation_warns(self):
        m = LevyModel(jumps=TwoPoint(1.0))
        grid = np.linspace(-1, 1, 21)
        with pytest.warns(BoundaryTruncationWarning):
            apply_generator(m, np.ones_like(grid), grid)
        _, flag = generator_matrix(m, grid, with_flag=True)
        assert flag

    def test_generator_kills_constants(self):
        m = LevyModel(b=0.1, sigma2=1.0, jumps=TwoPoint(1.0))
        grid = np.linspace(-10, 10, 201)
        out = apply_generator(m, np.ones_like(grid), grid, extrapolation="linear")
        assert np.allclose(out, 0.0, atol=1e-12)


class TestPaths:
    def test_reproducible_and_worker_invariant(self, monkeypatch):
        m = LevyModel(sigma2=1.0, jumps=TwoPoint(1.0))

        def block(_i, size, rng):
            return simulate_paths(m, 1.0, 0.01, size, rng).terminal

        monkeypatch.setenv("LFK_THREADS", "1")
        a = np.concatenate(map_blocks(block, 5000, 3, 1000))
        monkeypatch.setenv("LFK_THREADS", "3")
        b = np.concatenate(map_blocks(block, 5000, 3, 1000))
        assert np.array_equal(a, b)

    def test_jump_instants_are_on_the_path(self):
        path = sample_path(LevyModel(jumps=TwoPoint(1.0, 5.0)), 1.0, 0.1, seed=4)
        jt = path.jump_times
        assert len(jt) > 0
        assert np.allclose(np.abs(path.values - path.left)[path.values != path.left], 1.0)

    def test_scaled_brownian_variance(self):
        finals = [sample_scaled_brownian(0.1, 1.0, 0.05, seed=s).values[-1] for s in range(2000)]
        assert np.var(finals) == pytest.approx(0.1, rel=0.1)

    def test_terminal_moments_match_cumulants(self):
        m = LevyModel(b=0.2, sigma2=0.5, jumps=TwoPoint(1.0))
        x = simulate_paths(m, 1.0, 0.01, 100_000, substream(1, 0)).terminal
        assert x.mean() == pytest.approx(0.2, abs=4 * x.std() / math.sqrt(x.size))
        assert x.var() == pytest.approx(1.5, rel=0.02)

    def test_observation_times_inserted(self):
        batch = simulate_paths(LevyModel(sigma2=1.0), 1.0, 0.1, 3, substream(0, 0), extra_times=[0.123])
        assert 0.123 in batch.grid


class TestMoments:
    def test_analytic_two_point(self):
        m = LevyModel(jumps=TwoPoint(1.0))
        # compound Poisson rate 1, jumps +-1: E X^4 = t + 3 t^2
        assert analytic_moment(m, 0.5, 4) == pytest.approx(0.5 + 3 * 0.25)
        assert analytic_moment(m, 0.5, 2) == pytest.approx(0.5)

    def test_odd_order_rejected(self):
        with pytest.raises(ValueError):
            empirical_moments(LevyModel(sigma2=1.0), [0.5, 1.0], 3, 100)

    def test_sup_within_stderr(self):
        m = LevyModel(jumps=TwoPoint(1.0))
        est = empirical_moments(m, np.linspace(0, 1, 6), 2, 20_000, seed=2)
        exact = np.array([analytic_moment(m, t, 2) for t in est.t_grid])
        assert np.all(np.abs(est.moments - exact) <= 4 * est.stderr + 1e-12)
        assert est.sup == est.moments[-1]


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(0.1, 3.0), x=st.floats(-5, 5))
def test_exponent_nonnegative_and_even(alpha, x):
    m = LevyModel(sigma2=0.3, jumps=TwoPoint(alpha))
    v = characteristic_exponent(m, x)
    assert v >= 0
    assert v == pytest.approx(characteristic_exponent(m, -x))
