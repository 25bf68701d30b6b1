import math
import warnings

import numpy as np
import pytest

from levyfk import (
    BoundaryData,
    LevyModel,
    MCParams,
    ProblemSpec,
    RateFunction,
    ResolutionError,
    SolverError,
    TwoPoint,
    auto_grid,
    fk_estimate_many,
    refine_order,
    solve_pide,
    solve_pide_scaled,
)


def heat():
    return ProblemSpec(LevyModel(sigma2=1.0), RateFunction.polynomial([0.0]), BoundaryData.gaussian(1.0), 1.0)


def test_heat_kernel_exact():
    sol = solve_pide(heat(), 10.0, 1001, 1e-3)
    exact = np.exp(-sol.p**2 / 4) / math.sqrt(2)
    assert np.max(np.abs(sol.final - exact)) < 1e-4
    assert sol.positive


def test_harmonic_mehler_backward_in_time():
    spec = ProblemSpec(LevyModel(sigma2=1.0), RateFunction.quadratic(0.5), BoundaryData.one(), 1.0, "backward")
    sol = solve_pide(spec, 10.0, 1001, 1e-3)
    final = sol.value_at(0.5)
    assert final == pytest.approx(math.cosh(1) ** -0.5 * math.exp(-0.125 * math.tanh(1)), rel=1e-4)
    assert sol.times[-1] == pytest.approx(0.0)


def test_space_order_is_two():
    spec = ProblemSpec(LevyModel(sigma2=1.0, b=0.0), RateFunction.quadratic(0.5), BoundaryData.gaussian(1.0), 0.5)
    rep = refine_order(spec, [101, 201, 401, 801], kind="space", L=8.0, dt=1e-3, window=4.0)
    assert rep.regime_reached
    assert rep.order == pytest.approx(2.0, abs=0.3)


def test_time_order_crank_nicolson():
    spec = ProblemSpec(LevyModel(sigma2=1.0), RateFunction.quadratic(0.5), BoundaryData.gaussian(1.0), 0.5)
    rep = refine_order(spec, [0.04, 0.02, 0.01, 0.005], kind="time", L=8.0, n=201, window=4.0)
    assert rep.order == pytest.approx(2.0, abs=0.3)


def test_fk_and_pide_agree_two_point():
    spec = ProblemSpec(LevyModel(jumps=TwoPoint(1.0)), RateFunction.quadratic(0.5), BoundaryData.scaled_gaussian(0.5), 1.0)
    sol = solve_pide(spec, 10.0, 2001, 1e-3)
    est = fk_estimate_many([spec], [0.0, 1.0], MCParams(20_000, 1e-3, seed=1))[0]
    for p, e in zip([0.0, 1.0], est):
        assert e.within(sol.value_at(p), 3.0)


def test_explicit_scheme_blows_up():
    with pytest.raises(SolverError):
        solve_pide(heat(), 10.0, 401, 0.05, theta=0.0)


def test_under_resolved_grid():
    spec = heat()
    with pytest.raises(ResolutionError):
        solve_pide_scaled(spec, 0.01, 5.0, 101, 1e-3)


def test_auto_grid_divides_jump():
    spec = ProblemSpec(LevyModel(jumps=TwoPoint(1.0)), RateFunction.quadratic(0.5), BoundaryData.one(), 1.0)
    L, n, dt = auto_grid(spec, 0.05, 0.5)
    h = 2 * L / (n - 1)
    assert (0.05 / h) == pytest.approx(round(0.05 / h))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_pide_scaled(spec, 0.05, L, n, dt)


def test_long_table_shape():
    sol = solve_pide(heat(), 5.0, 51, 0.01, store_every=50)
    table = sol.to_long()
    assert table.shape == (len(sol.tau) * 51, 3)
    assert sol.mass()[0] == pytest.approx(math.sqrt(2 * math.pi), rel=1e-3)
