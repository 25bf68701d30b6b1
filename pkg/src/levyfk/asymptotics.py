"""Semiclassical prefactors, drift predictions and hbar-sweeps.

Every Gaussian prefactor here is an expectation of the form

    E[ exp( -1/2 int_0^T a(s) W_s^2 ds - 1/2 beta W_T^2 ) ]

over a standard Wiener path ``W``. The Monte Carlo route samples ``W`` on a
uniform grid and applies the trapezoid rule. The deterministic route solves
the Riccati equation ``R' = v R^2 - a``, ``R(T) = beta`` and returns
``exp(-1/2 int v R)``, where ``v`` is the fluctuation variance rate
(``v = 1`` for a Wiener path). Sweeps fit ``ln u = -A/hbar + ln C`` and
compare the fit with the extremal's action and this prefactor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from ._blocks import map_blocks
from .errors import ConfigError, DegenerateError, ResolutionError, SolverError
from .fk_engine import MCEstimate, MCParams, fk_estimate
from .levy_core import LevyModel
from .pide import auto_grid, solve_pide_scaled
from .problem import ProblemSpec, RateFunction
from .variational import (
    BoundaryTerm,
    Hamiltonian,
    Lagrangian,
    MinimizerResult,
    solve_el,
    solve_el_config,
    solve_el_momentum,
)

__all__ = [
    "PrefactorValue",
    "K1Estimate",
    "DriftPrediction",
    "ExpansionReport",
    "prefactor_F",
    "prefactor_mc",
    "quadratic_functional_mc",
    "gaussian_k0",
    "gaussian_k1bar",
    "drift_prediction_config",
    "drift_prediction_momentum",
    "jump_prefactor_mc",
    "riccati_prefactor",
    "predicted_prefactor",
    "sweep_minimizer",
    "hbar_sweep",
]

_MC_DEFAULT = MCParams(n_paths=100_000, dt=1e-3)


# ---------------------------------------------------------------------------
# harmonic prefactor


@dataclass(frozen=True)
class PrefactorValue:
    t: float
    direction: str
    F: float
    K: float
    F_ode: float
    K_ode: float

    @property
    def discrepancy(self) -> float:
        return abs(self.F - self.F_ode)


def prefactor_F(t: float, direction: str = "forward") -> PrefactorValue:
    """``F`` and ``K = (2 pi F)^{-1/2}`` by closed form and by integrating ``F'' = F``.

    Forward: ``F(1) = 1/(2 pi)``, ``F'(1) = -1/pi``, so
    ``F(t) = (cosh(1-t) + 2 sinh(1-t)) / (2 pi)``. Backward:
    ``F*(0) = 1/(2 pi)``, ``F*'(0) = 1/pi``, so ``F*(t) = (cosh t + 2 sinh t)/(2 pi)``.
    """
    if not -1e-12 <= t <= 1 + 1e-12:
        raise ValueError("t must lie in [0, 1]")
    if direction == "forward":
        tau = 1.0 - t
        start, y0 = 1.0, [1 / (2 * math.pi), -1 / math.pi]
    elif direction == "backward":
        tau = t
        start, y0 = 0.0, [1 / (2 * math.pi), 1 / math.pi]
    else:
        raise ValueError("direction must be 'forward' or 'backward'")
    closed = (math.cosh(tau) + 2 * math.sinh(tau)) / (2 * math.pi)
    if t == start:
        ode = y0[0]
    else:
        sol = solve_ivp(lambda _s, y: [y[1], y[0]], (start, t), y0, method="DOP853", rtol=1e-13, atol=1e-15)
        ode = float(sol.y[0, -1])
    return PrefactorValue(
        t=float(t),
        direction=direction,
        F=closed,
        K=(2 * math.pi * closed) ** -0.5,
        F_ode=ode,
        K_ode=(2 * math.pi * ode) ** -0.5,
    )


# ---------------------------------------------------------------------------
# Wiener functionals


def _wiener_block(T: float, dt: float, size: int, rng: np.random.Generator):
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / n
    W = np.zeros((size, n + 1))
    np.cumsum(rng.standard_normal((size, n)) * math.sqrt(h), axis=1, out=W[:, 1:])
    s = np.linspace(0.0, T, n + 1)
    weights = np.full(n + 1, h)
    weights[0] = weights[-1] = 0.5 * h
    return s, W, weights


def _as_profile(a, s: np.ndarray) -> np.ndarray:
    if callable(a):
        return np.broadcast_to(np.asarray(a(s), dtype=float), s.shape)
    return np.full(s.shape, float(a))


def _mean_estimate(sums: np.ndarray, mc: MCParams) -> MCEstimate:
    n = mc.n_paths
    mean = sums[0] / n
    var = max(sums[1] / n - mean * mean, 0.0) * n / (n - 1)
    return MCEstimate(float(mean), math.sqrt(var / n), n, mc.dt, mc.seed, math.log(mean) if mean > 0 else -math.inf)


def quadratic_functional_mc(a, beta: float, T: float, mc: MCParams = _MC_DEFAULT) -> MCEstimate:
    """MC estimate of ``E[exp(-1/2 int_0^T a(s) W^2 ds - 1/2 beta W_T^2)]``.

    ``a`` is a constant or a callable of the time grid.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    if T == 0:
        return MCEstimate(1.0, 0.0, mc.n_paths, mc.dt, mc.seed, 0.0)

    def block(_i, size, rng):
        s, W, w = _wiener_block(T, min(mc.dt, T), size, rng)
        q = -0.5 * (W * W) @ (w * _as_profile(a, s)) - 0.5 * beta * W[:, -1] ** 2
        x = np.exp(q)
        return np.array([x.sum(), (x * x).sum()])

    return _mean_estimate(np.sum(map_blocks(block, mc.n_paths, mc.seed, mc.block_size), axis=0), mc)


def prefactor_mc(t: float, mc: MCParams = _MC_DEFAULT, direction: str = "forward") -> MCEstimate:
    """``E[exp(-1/2 int_0^T W^2 ds - W_T^2)]`` with ``T = 1 - t`` (forward) or ``T = t`` (backward)."""
    if not -1e-12 <= t <= 1 + 1e-12:
        raise ValueError("t must lie in [0, 1]")
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    T = 1.0 - t if direction == "forward" else t
    return quadratic_functional_mc(1.0, 2.0, max(T, 0.0), mc)


def _along(res: MinimizerResult, values: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    s0 = res.s - res.s[0]
    return lambda s: np.interp(s, s0, values)


def gaussian_k0(
    V: RateFunction,
    res: MinimizerResult,
    q: float,
    t: float,
    mc: MCParams = _MC_DEFAULT,
    kappa: float = 0.5,
) -> MCEstimate:
    """``E[exp(-1/2 int_0^t V''(phi*+q) W^2 ds - kappa W_t^2)]``."""
    if t == 0:
        return MCEstimate(1.0, 0.0, mc.n_paths, mc.dt, mc.seed, 0.0)
    a = _along(res, V.derivative(res.phi + q, 2))
    return quadratic_functional_mc(a, 2.0 * kappa, t, mc)


@dataclass(frozen=True)
class K1Estimate:
    """The correction functional, the matching ``K0`` on the same paths, and their ratio."""

    k1: MCEstimate
    k0: MCEstimate
    ratio: float
    ratio_stderr: float


def gaussian_k1bar(
    V: RateFunction,
    res: MinimizerResult,
    q: float,
    t: float,
    mc: MCParams = _MC_DEFAULT,
    kappa: float = 0.5,
) -> K1Estimate:
    """First-order drift correction functional, evaluated in a single pass.

    Per path, with ``Q = -1/2 int V'' W^2 - kappa W_t^2``::

        e^Q ( G2/2 + G1 F3/6 + G F4/24 + G F3^2/72 )

    where ``G1 = int V'' W + 2 kappa W_t``, ``G2 = int V''' W^2``,
    ``F3 = -int V''' W^3``, ``F4 = -int V'''' W^4`` along ``phi* + q`` and
    ``G = -phi*'(0)``.
    """
    G = res.G
    x = res.phi + q
    d2, d3, d4 = (_along(res, V.derivative(x, k)) for k in (2, 3, 4))
    if t == 0:
        one = MCEstimate(1.0, 0.0, mc.n_paths, mc.dt, mc.seed, 0.0)
        zero = MCEstimate(0.0, 0.0, mc.n_paths, mc.dt, mc.seed, -math.inf)
        return K1Estimate(zero, one, 0.0, 0.0)

    def block(_i, size, rng):
        s, W, w = _wiener_block(t, min(mc.dt, t), size, rng)
        a2, a3, a4 = d2(s) * w, d3(s) * w, d4(s) * w
        W2 = W * W
        Q = -0.5 * W2 @ a2 - kappa * W[:, -1] ** 2
        G1 = W @ a2 + 2 * kappa * W[:, -1]
        G2 = W2 @ a3
        F3 = -(W2 * W) @ a3
        F4 = -(W2 * W2) @ a4
        e = np.exp(Q)
        k1 = e * (0.5 * G2 + G1 * F3 / 6 + G * F4 / 24 + G * F3 * F3 / 72)
        return np.array([k1.sum(), (k1 * k1).sum(), e.sum(), (e * e).sum(), (k1 * e).sum()])

    sums = np.sum(map_blocks(block, mc.n_paths, mc.seed, mc.block_size), axis=0)
    n = mc.n_paths
    k1 = _mean_estimate(sums[0:2], mc)
    k0 = _mean_estimate(sums[2:4], mc)
    cov = (sums[4] / n - k1.mean * k0.mean) * n / (n - 1)
    ratio = k1.mean / k0.mean
    var_x, var_y = (k1.stderr**2) * n, (k0.stderr**2) * n
    var_r = (var_x - 2 * ratio * cov + ratio * ratio * var_y) / (k0.mean**2 * n)
    return K1Estimate(k1, k0, float(ratio), math.sqrt(max(var_r, 0.0)))


# ---------------------------------------------------------------------------
# drift predictions


@dataclass
class DriftPrediction:
    """``hbar grad(log u) ~ leading + correction_coeff * hbar``."""

    leading: float
    correction_coeff: float
    correction_stderr: float
    G: float
    minimizer: MinimizerResult = field(repr=False)


def drift_prediction_config(
    V: RateFunction,
    q: float,
    t: float,
    kappa: float = 0.5,
    mc: MCParams | None = None,
) -> DriftPrediction:
    """Leading drift ``-G(phi*)`` and correction coefficient ``-K1/K0``.

    The correction vanishes identically for polynomial ``V`` of degree at most
    two (all third and fourth derivatives are zero), so no sampling is done.
    """
    res = solve_el_config(V, q, t, kappa)
    if V.is_polynomial and V.degree <= 2:
        return DriftPrediction(-res.G, 0.0, 0.0, res.G, res)
    k1 = gaussian_k1bar(V, res, q, t, mc or _MC_DEFAULT, kappa)
    return DriftPrediction(-res.G, -k1.ratio, k1.ratio_stderr, res.G, res)


def drift_prediction_momentum(
    model: LevyModel | Lagrangian,
    p: float,
    t: float,
    kappa: float = 0.5,
    rate: RateFunction | None = None,
) -> DriftPrediction:
    """Leading drift ``-G~ = L0'(phi~*'(0))`` for the momentum representation."""
    L = model if isinstance(model, Lagrangian) else Lagrangian(model)
    res = solve_el_momentum(L, p, t, kappa, rate)
    return DriftPrediction(-res.G, 0.0, 0.0, res.G, res)


def jump_prefactor_mc(alpha: float, res: MinimizerResult, mc: MCParams = _MC_DEFAULT) -> MCEstimate:
    """``E[exp(-int_t^1 sigma_s^2 ds)]`` with ``sigma_s = alpha sqrt(cosh rho(s)) W_{s-t}``.

    ``rho`` is read from the two-point minimiser at absolute time ``s``; the
    Wiener path starts at 0 at the left end ``t``.
    """
    if res.rho is None:
        raise ConfigError("minimiser carries no rho profile; use solve_el_jump")
    a = _along(res, 2.0 * alpha * alpha * np.cosh(res.rho))
    return quadratic_functional_mc(a, 0.0, res.t1 - res.t0, mc)


# ---------------------------------------------------------------------------
# deterministic prefactor


def riccati_prefactor(v, a, beta: float, T: float) -> float:
    """``E[exp(-1/2 int a Y^2 - 1/2 beta Y_T^2)]`` for ``dY = sqrt(v) dW``, ``Y_0 = 0``.

    ``v`` and ``a`` are constants or callables of time on ``[0, T]``.
    """
    if T == 0:
        return 1.0
    vf = v if callable(v) else (lambda _s, c=float(v): c)
    af = a if callable(a) else (lambda _s, c=float(a): c)

    def rhs(s, y):
        r = y[0]
        return [vf(s) * r * r - af(s), -0.5 * vf(s) * r]

    sol = solve_ivp(rhs, (T, 0.0), [beta, 0.0], method="DOP853", rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise SolverError(f"Riccati integration failed: {sol.message}")
    # integrated from T down to 0, y[1] ends at 1/2 int_0^T v R ds
    return math.exp(-float(sol.y[1, -1]))


def predicted_prefactor(res: MinimizerResult) -> float:
    """Gaussian prefactor around an extremal, from the Riccati equation.

    Fluctuations have variance rate ``H0''(psi)``, curvature ``U''(phi + p)``
    and terminal weight ``2 kappa`` from a square boundary term.
    """
    s0 = res.s - res.s[0]
    v = res.hamiltonian.h0pp(res.psi)
    a = res.rate.derivative(res.phi + res.p, 2)
    beta = 2.0 * res.boundary_term.kappa
    return riccati_prefactor(
        lambda s: float(np.interp(s, s0, v)),
        lambda s: float(np.interp(s, s0, a)),
        beta,
        float(s0[-1]),
    )


# ---------------------------------------------------------------------------
# hbar sweeps


@dataclass
class ExpansionReport:
    """Fit of ``ln u(hbar) = -A/hbar + ln C`` against the semiclassical prediction."""

    hbars: list[float]
    log_values: list[float]
    A_fit: float
    logC_fit: float
    A_pred: float
    C_pred: float
    A_two_smallest: float
    fit_residuals: list[float]
    pred_residuals: list[float]
    complete: bool = True
    failures: dict = field(default_factory=dict)
    source: str = "pide"
    normalization_removed: bool = False
    provenance: dict = field(default_factory=dict)

    @property
    def C_fit(self) -> float:
        return math.exp(self.logC_fit)

    @property
    def A_rel_error(self) -> float:
        return abs(self.A_fit - self.A_pred) / abs(self.A_pred)

    @property
    def A_two_rel_error(self) -> float:
        return abs(self.A_two_smallest - self.A_pred) / abs(self.A_pred)

    @property
    def C_rel_error(self) -> float:
        return abs(self.C_fit - self.C_pred) / abs(self.C_pred)

    def rows(self) -> list[dict]:
        return [
            {"hbar": h, "log_u": y, "fit_residual": r, "pred_residual": e}
            for h, y, r, e in zip(self.hbars, self.log_values, self.fit_residuals, self.pred_residuals)
        ]

    def summary(self) -> dict:
        return {
            "source": self.source,
            "complete": self.complete,
            "A_fit": self.A_fit,
            "A_pred": self.A_pred,
            "A_two_smallest": self.A_two_smallest,
            "A_rel_error": self.A_rel_error,
            "C_fit": self.C_fit,
            "C_pred": self.C_pred,
            "C_rel_error": self.C_rel_error,
        }


def _check_ladder(hbars: Sequence[float]) -> list[float]:
    hbars = [float(h) for h in hbars]
    if len(hbars) < 4:
        raise ValueError("an hbar sweep needs at least 4 values")
    if any(h <= 0 for h in hbars):
        raise ValueError("hbar values must be positive")
    if any(b >= a for a, b in zip(hbars, hbars[1:])):
        raise ValueError("hbar values must be strictly decreasing")
    return hbars


def sweep_minimizer(spec: ProblemSpec, p: float, t: float | None = None) -> MinimizerResult:
    """Extremal for ``spec`` started at ``p`` over the elapsed time at ``t``."""
    tau = spec.elapsed(t)
    boundary = BoundaryTerm.from_data(spec.data)
    return solve_el(Hamiltonian(spec.model), spec.rate, p, 0.0, tau, boundary)


def _weighted_fit(hbars: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    X = np.column_stack([-1.0 / hbars, np.ones_like(hbars)])
    sw = np.sqrt(1.0 / hbars)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    return float(coef[0]), float(coef[1])


def hbar_sweep(
    spec: ProblemSpec,
    p: float,
    t: float | None = None,
    hbars: Sequence[float] = (0.4, 0.2, 0.1, 0.05, 0.025),
    source: str = "pide",
    mc: MCParams | None = None,
    points_per_width: float = 16.0,
    margin: float = 6.0,
) -> ExpansionReport:
    """Solve at each ``hbar`` and fit ``ln u = -A/hbar + ln C`` with weights ``1/hbar``.

    Normalised Gaussian data contributes ``-1/2 ln(2 pi hbar)``; it is removed
    before fitting so ``C`` compares with the Gaussian prefactor. A failure at
    some ``hbar`` is recorded and the report is flagged incomplete.
    """
    hbars = _check_ladder(hbars)
    if source not in ("pide", "mc"):
        raise ValueError("source must be 'pide' or 'mc'")
    res = sweep_minimizer(spec, p, t)
    A_pred = res.total
    C_pred = predicted_prefactor(res)
    extent = float(np.max(np.abs(res.phi)))
    normalized = spec.data.family == "scaled_gaussian" and spec.data.normalized

    used, logs, failures, provenance = [], [], {}, {}
    for h in hbars:
        try:
            if source == "pide":
                L, n, dt = auto_grid(spec, h, p, points_per_width, margin, extent)
                sol = solve_pide_scaled(spec, h, L, n, dt, points_per_width=points_per_width / 2)
                lu = sol.log_value_at(p, t)
                provenance[h] = {"L": L, "n": n, "dt": dt}
            else:
                params = mc or MCParams()
                est = fk_estimate(spec.with_model(spec.model.with_hbar(h)), p, params, t)
                lu = est.log_mean
                provenance[h] = {"n_paths": params.n_paths, "dt": params.dt, "seed": params.seed, "stderr": est.stderr}
        except (SolverError, ResolutionError, DegenerateError, ValueError) as exc:
            failures[h] = str(exc)
            continue
        if not math.isfinite(lu):
            failures[h] = "non-finite log value"
            continue
        if normalized:
            lu += 0.5 * math.log(2 * math.pi * h)
        used.append(h)
        logs.append(lu)

    if len(used) < 2:
        raise SolverError(f"hbar sweep failed at too many points: {failures}")
    hb = np.asarray(used)
    y = np.asarray(logs)
    A_fit, logC = _weighted_fit(hb, y)
    A_two = -(y[-1] - y[-2]) / (1.0 / hb[-1] - 1.0 / hb[-2])
    fit_res = y - (-A_fit / hb + logC)
    pred_res = y - (-A_pred / hb + math.log(C_pred))
    return ExpansionReport(
        hbars=used,
        log_values=logs,
        A_fit=A_fit,
        logC_fit=logC,
        A_pred=A_pred,
        C_pred=C_pred,
        A_two_smallest=float(A_two),
        fit_residuals=fit_res.tolist(),
        pred_residuals=pred_res.tolist(),
        complete=not failures and len(used) >= 4,
        failures=failures,
        source=source,
        normalization_removed=normalized,
        provenance=provenance,
    )
