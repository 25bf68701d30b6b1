"""Acceptance checks, runnable as a fast or a full suite.

Each ``criterion_N`` returns a :class:`CriterionResult`. Pass/fail combines
the numerical tolerance with the wall-clock budget; one-off JIT compilation
is excluded by warming the kernels up before timing.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .asymptotics import (
    drift_prediction_config,
    drift_prediction_momentum,
    gaussian_k0,
    hbar_sweep,
    prefactor_F,
    prefactor_mc,
)
from .errors import BoundaryTruncationWarning
from .fk_engine import MCParams, drift_estimate, fk_estimate_many
from .levy_core import GammaDensity, LevyModel, TwoPoint, analytic_moment, empirical_moments
from .pide import solve_pide
from .problem import BoundaryData, ProblemSpec, RateFunction
from .variational import Hamiltonian, Lagrangian, solve_el_config

__all__ = ["CriterionResult", "CRITERIA", "SUITES", "run_suite", "format_table"]


@dataclass
class CriterionResult:
    number: int | str
    name: str
    passed: bool
    detail: str
    runtime: float
    budget: float

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number}. {self.name}: {self.detail} ({self.runtime:.1f}s / {self.budget:g}s)"


def _timed(number, name, budget):
    def wrap(fn):
        def run(**kw) -> CriterionResult:
            start = time.perf_counter()
            ok, detail = fn(**kw)
            elapsed = time.perf_counter() - start
            within = elapsed <= budget
            if not within:
                detail += "; over time budget"
            return CriterionResult(number, name, bool(ok and within), detail, elapsed, budget)

        run.number, run.title, run.budget = number, name, budget
        return run

    return wrap


def warm_up() -> None:
    """Compile the JIT kernels so they do not count against time budgets."""
    solve_el_config(RateFunction.quadratic(0.5), 0.5, 0.5, 1.0)


def harmonic_spec() -> ProblemSpec:
    """Final-value harmonic problem with data ``exp(-p^2/hbar)`` on ``[0, 1]``."""
    return ProblemSpec(LevyModel(sigma2=1.0), RateFunction.quadratic(0.5), BoundaryData.scaled_gaussian(1.0), 1.0, "backward")


def jump_spec(alpha: float = 1.0) -> ProblemSpec:
    """Final-value two-point problem with ``U = p^2 - p`` and data ``exp(-1/hbar)``."""
    return ProblemSpec(
        LevyModel(jumps=TwoPoint(alpha)),
        RateFunction.quadratic_minus_linear(0.0),
        BoundaryData.constant_exp(),
        1.0,
        "backward",
    )


def drift_spec(model: LevyModel, t: float) -> ProblemSpec:
    """``U = p^2/2`` with normalised Gaussian data ``(2 pi hbar)^{-1/2} exp(-p^2/(2 hbar))``."""
    return ProblemSpec(model, RateFunction.quadratic(0.5), BoundaryData.scaled_gaussian(0.5, normalized=True), t)


@_timed(1, "Legendre transform of cosh(alpha x) - 1", 1.0)
def criterion_1():
    worst = 0.0
    for alpha in (0.5, 1.0, 2.0):
        u = np.linspace(-10 * alpha, 10 * alpha, 4001)
        closed = (u / alpha) * np.arcsinh(u / alpha) + 1 - np.sqrt(1 + (u / alpha) ** 2)
        numeric = Lagrangian(Hamiltonian.two_point(alpha), "numeric")
        worst = max(worst, float(np.max(np.abs(numeric.value(u) - closed))))
    return worst <= 1e-8, f"max abs error {worst:.2e} (tol 1e-8)"


@_timed(2, "Harmonic prefactor by Monte Carlo", 30.0)
def criterion_2(n_paths: int = 100_000, seed: int = 2):
    zs = []
    for i, t in enumerate((0.0, 0.25, 0.5, 0.75)):
        target = (math.cosh(1 - t) + 2 * math.sinh(1 - t)) ** -0.5
        est = prefactor_mc(t, MCParams(n_paths, 1e-3, seed + i))
        zs.append((est.mean - target) / est.stderr)
    worst = max(abs(z) for z in zs)
    return worst <= 3, "z-scores " + ", ".join(f"{z:+.2f}" for z in zs)


@_timed(3, "Harmonic boundary-value problem vs closed form", 1.0)
def criterion_3(seed: int = 3):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        p, t = rng.uniform(-2, 2), rng.uniform(0.0, 0.9)
        res = solve_el_config(RateFunction.quadratic(0.5), p, 1.0 - t, 1.0)
        worst = max(worst, res.closed_form_error)
    return worst <= 1e-6, f"sup path error {worst:.2e} over 10 (p, t) (tol 1e-6)"


def fk_pide_matrix(n_paths: int = 100_000, seed: int = 4, points=(0.0, 0.5, 1.0)):
    """Rows ``(model, rate, data, p, mc mean, stderr, grid value)`` of the oracle matrix."""
    models = {
        "brownian": LevyModel(sigma2=1.0),
        "two_point": LevyModel(jumps=TwoPoint(1.0)),
        "gamma": LevyModel(jumps=GammaDensity()),
    }
    rates = {"p^2/2": RateFunction.quadratic(0.5), "p^2-p+1": RateFunction.quadratic_minus_linear(1.0)}
    datas = {"gaussian": BoundaryData.scaled_gaussian(0.5), "one": BoundaryData.one()}
    rows = []
    for mname, model in models.items():
        specs, labels = [], []
        for rname, rate in rates.items():
            for dname, data in datas.items():
                specs.append(ProblemSpec(model, rate, data, 1.0))
                labels.append((rname, dname))
        estimates = fk_estimate_many(specs, points, MCParams(n_paths, 1e-3, seed))
        for spec, (rname, dname), row in zip(specs, labels, estimates):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", BoundaryTruncationWarning)
                sol = solve_pide(spec, 10.0, 2001, 1e-3)
            for p, est in zip(points, row):
                rows.append((mname, rname, dname, p, est.mean, est.stderr, sol.value_at(p)))
    return rows


@_timed(4, "Feynman-Kac Monte Carlo vs PIDE grid", 300.0)
def criterion_4(n_paths: int = 100_000, seed: int = 4):
    rows = fk_pide_matrix(n_paths, seed)
    zs = [(mean - grid) / se for *_, mean, se, grid in rows]
    worst = max(abs(z) for z in zs)
    return worst <= 3, f"{len(rows)} comparisons, max |z| = {worst:.2f}"


@_timed(5, "Large-deviation slope of the harmonic problem", 180.0)
def criterion_5():
    rep = hbar_sweep(harmonic_spec(), 0.4, 0.5)
    ok = rep.complete and rep.A_rel_error <= 0.01 and rep.A_two_rel_error <= 0.01 and rep.C_rel_error <= 0.10
    return ok, (
        f"A fit {rep.A_fit:.6f}, two smallest hbar {rep.A_two_smallest:.6f}, predicted {rep.A_pred:.6f} "
        f"(rel {rep.A_rel_error:.1e}, {rep.A_two_rel_error:.1e}); C fit {rep.C_fit:.4f} vs {rep.C_pred:.4f}"
    )


@_timed(6, "Jump-case exponent with trivial minimiser", 180.0)
def criterion_6():
    rep = hbar_sweep(jump_spec(1.0), 0.5, 0.0)
    rel = abs(rep.A_fit - 0.75) / 0.75
    return rep.complete and rel <= 0.02, f"fitted exponent {rep.A_fit:.5f} vs 0.75 (rel {rel:.1e}, tol 2e-2)"


@_timed(7, "Configuration drift asymptotics", 300.0)
def criterion_7(n_paths: int = 100_000, seed: int = 7, q: float = 1.0, t: float = 0.5):
    V = RateFunction.quadratic(0.5)
    pred = drift_prediction_config(V, q, t, kappa=0.5)
    spec = drift_spec(LevyModel(sigma2=1.0), t)
    errs, ses = [], []
    for i, h in enumerate((0.2, 0.1, 0.05)):
        est = drift_estimate(spec, h, None, q, 0.05 * h, MCParams(n_paths, 1e-3, seed + i))
        errs.append(abs(est.value - pred.leading))
        ses.append(est.stderr)
    checks = []
    for k in range(2):
        noise_dominated = errs[k] <= 3 * ses[k] and errs[k + 1] <= 3 * ses[k + 1]
        ratio = errs[k + 1] / errs[k] if errs[k] > 0 else math.inf
        checks.append(noise_dominated or 0.3 <= ratio <= 0.8)
    ok = all(checks) and pred.correction_coeff == 0.0
    detail = "errors " + ", ".join(f"{e:.4f}±{s:.4f}" for e, s in zip(errs, ses))
    return ok, f"leading {pred.leading:.6f}; {detail}; correction {pred.correction_coeff}"


@_timed(8, "Momentum drift asymptotics", 300.0)
def criterion_8(n_paths: int = 100_000, seed: int = 8, p: float = 0.3, t: float = 0.5, hbar: float = 0.05):
    gauss = drift_prediction_momentum(LevyModel(sigma2=1.0), 1.0, t).leading
    config = drift_prediction_config(RateFunction.quadratic(0.5), 1.0, t, kappa=0.5).leading
    dual = abs(gauss - config)
    model = LevyModel(jumps=TwoPoint(1.0))
    pred = drift_prediction_momentum(model, p, t).leading
    est = drift_estimate(drift_spec(model, t), hbar, None, p, 0.05 * hbar, MCParams(n_paths, 1e-3, seed))
    err = abs(est.value - pred)
    tol = max(3 * est.stderr, 0.15 * abs(pred))
    return dual <= 1e-8 and err <= tol, (
        f"self-dual gap {dual:.1e}; two-point drift {est.value:.5f}±{est.stderr:.5f} vs {pred:.5f}"
    )


@_timed(9, "Quadratic Wiener functional", 30.0)
def criterion_9(n_paths: int = 100_000, seed: int = 9):
    V = RateFunction.quadratic(0.5)
    res = solve_el_config(V, 0.0, 1.0, 0.5)
    est = gaussian_k0(V, res, 0.0, 1.0, MCParams(n_paths, 1e-3, seed), kappa=0.5)
    z = (est.mean - math.exp(-0.5)) / est.stderr
    return abs(z) <= 3, f"{est.mean:.5f}±{est.stderr:.5f} vs {math.exp(-0.5):.6f} (z {z:+.2f})"


@_timed(10, "Moment bounds for jump models", 60.0)
def criterion_10(n_paths: int = 20_000, seed: int = 10):
    models = {"two_point": LevyModel(jumps=TwoPoint(1.0)), "gamma": LevyModel(jumps=GammaDensity())}
    t_grid = np.linspace(0.0, 1.0, 11)
    ok, parts = True, []
    for name, model in models.items():
        for m in (2, 4, 6):
            est = empirical_moments(model, t_grid, m, n_paths, seed)
            finite = math.isfinite(est.sup) and math.isfinite(est.sup_stderr)
            ok &= finite
            if m == 2:
                exact = analytic_moment(model, float(est.t_grid[est.argsup]), 2)
                z = (est.sup - exact) / est.sup_stderr
                ok &= abs(z) <= 3
                parts.append(f"{name} m=2 z {z:+.2f}")
            else:
                parts.append(f"{name} m={m} sup {est.sup:.3g}")
    return ok, "; ".join(parts)


@_timed("F", "Prefactor ODE vs closed form", 5.0)
def criterion_prefactor_ode():
    worst = max(prefactor_F(t, d).discrepancy for t in (0, 0.25, 0.5, 0.75, 1) for d in ("forward", "backward"))
    return worst <= 1e-9, f"max discrepancy {worst:.1e} (tol 1e-9)"


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}

SUITES = {
    "fast": [criterion_1, criterion_prefactor_ode, criterion_3, criterion_5, criterion_6],
    "full": [criterion_prefactor_ode] + list(CRITERIA.values()),
}


def run_suite(name: str, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    if name not in SUITES:
        raise KeyError(name)
    warm_up()
    results = []
    for fn in SUITES[name]:
        res = fn()
        if echo is not None:
            echo(res.line)
        results.append(res)
    return results


def format_table(results: list[CriterionResult]) -> str:
    head = f"{'#':>3}  {'status':6}  {'time[s]':>8}  name"
    lines = [head, "-" * len(head)]
    for r in results:
        lines.append(f"{str(r.number):>3}  {'PASS' if r.passed else 'FAIL':6}  {r.runtime:8.1f}  {r.name}")
    return "\n".join(lines)
