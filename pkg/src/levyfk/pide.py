"""Deterministic method-of-lines solver for the killed Lévy PIDE.

Solves ``du/dtau = A u - U u / hbar`` on ``[-L, L]`` with ``u = 0`` at both
ends. Diffusion is second-order central, drift first-order upwind, jump
terms exact atom shifts (linear interpolation off-grid, quadrature nodes for
the gamma density) and ``-U u`` pointwise. Time stepping is the theta scheme
(Crank-Nicolson by default) with a single sparse LU factorisation.

Final-value problems (``direction="backward"``) are integrated in elapsed
time ``tau = horizon - t``. This one substitution covers both sign layouts
used for the semiclassical equations: a final-value problem
``hbar du/dt = -(hbar^2 sigma2/2) u'' + U u`` becomes ``hbar du/dtau =
(hbar^2 sigma2/2) u'' - U u``, and the jump versions transform the same way.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import ResolutionError, SolverError
from .levy_core import LevyModel, generator_matrix
from .problem import ProblemSpec

__all__ = [
    "GridSolution",
    "ConvergenceReport",
    "solve_pide",
    "solve_pide_scaled",
    "auto_grid",
    "refine_order",
]

_MAX_STORED = 5_000_000


@dataclass
class GridSolution:
    """``u[j, i]`` at elapsed time ``tau[j]`` and point ``p[i]``."""

    p: np.ndarray
    tau: np.ndarray
    u: np.ndarray
    horizon: float
    direction: str = "forward"
    hbar: float = 1.0
    positive: bool = True

    @property
    def times(self) -> np.ndarray:
        """Physical times of the stored slabs."""
        return self.tau if self.direction == "forward" else self.horizon - self.tau

    @property
    def final(self) -> np.ndarray:
        return self.u[-1]

    def slab(self, t: float) -> np.ndarray:
        tau = t if self.direction == "forward" else self.horizon - t
        j = int(np.argmin(np.abs(self.tau - tau)))
        if abs(self.tau[j] - tau) > 1e-9 * max(1.0, self.horizon):
            raise ValueError(f"no stored slab at t={t}")
        return self.u[j]

    def value_at(self, p: float, t: float | None = None) -> float:
        row = self.final if t is None else self.slab(t)
        return float(np.interp(p, self.p, row))

    def log_value_at(self, p: float, t: float | None = None) -> float:
        """Log of ``u`` at ``p``; linear interpolation in log space between nodes."""
        row = self.final if t is None else self.slab(t)
        i = int(np.searchsorted(self.p, p))
        if i < len(self.p) and abs(self.p[i] - p) < 1e-12:
            return math.log(row[i])
        i = min(max(i, 1), len(self.p) - 1)
        w = (p - self.p[i - 1]) / (self.p[i] - self.p[i - 1])
        return (1 - w) * math.log(row[i - 1]) + w * math.log(row[i])

    def mass(self) -> np.ndarray:
        h = self.p[1] - self.p[0]
        return self.u.sum(axis=1) * h

    def to_long(self):
        """Rows ``(t, p, u)`` for CSV output."""
        tt = np.repeat(self.times, len(self.p))
        pp = np.tile(self.p, len(self.tau))
        return np.column_stack([tt, pp, self.u.ravel()])


def solve_pide(
    spec: ProblemSpec,
    L: float,
    n: int,
    dt: float,
    theta: float = 0.5,
    store_every: int | None = None,
) -> GridSolution:
    """Solve the PIDE of ``spec`` on ``n`` uniform points of ``[-L, L]`` up to the horizon."""
    if n < 5 or not L > 0 or not dt > 0:
        raise ValueError("need n >= 5, L > 0, dt > 0")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    model = spec.model
    hbar = spec.hbar
    grid = np.linspace(-L, L, n)
    tau_end = spec.horizon
    n_steps = max(1, int(round(tau_end / dt)))
    step = tau_end / n_steps

    gen = generator_matrix(model, grid, drift_scheme="upwind")
    rate = spec.rate(grid)
    op = (gen - sparse.diags(rate / hbar)).tocsr()[1:-1, 1:-1].tocsc()
    eye = sparse.identity(n - 2, format="csc")
    lhs = (eye - theta * step * op).tocsc()
    rhs = (eye + (1.0 - theta) * step * op).tocsr()
    solve = splu(lhs).solve if theta > 0 else None

    u = spec.data.value(grid, hbar).astype(float)
    u[0] = u[-1] = 0.0
    if store_every is None:
        store_every = max(1, int(math.ceil((n_steps + 1) * n / _MAX_STORED)))
    stored_tau, stored = [0.0], [u.copy()]
    sup0 = float(np.max(np.abs(u)))
    check_growth = bool(np.min(rate) >= 0)
    positive = True
    inner = u[1:-1]
    for k in range(1, n_steps + 1):
        b = rhs @ inner
        inner = solve(b) if solve is not None else b
        if not np.all(np.isfinite(inner)):
            raise SolverError(f"non-finite solution at step {k} with dt={step:g}")
        sup = float(np.max(np.abs(inner)))
        if check_growth and sup > 10.0 * sup0:
            raise SolverError(f"instability: sup-norm grew beyond 10x the initial value with dt={step:g}")
        if positive and np.min(inner) < -1e-10 * max(sup, 1e-300):
            positive = False
        if k % store_every == 0 or k == n_steps:
            full = np.zeros(n)
            full[1:-1] = inner
            stored_tau.append(k * step)
            stored.append(full)
    return GridSolution(
        p=grid,
        tau=np.asarray(stored_tau),
        u=np.asarray(stored),
        horizon=spec.horizon,
        direction=spec.direction,
        hbar=hbar,
        positive=positive,
    )


def _atom_step(model: LevyModel) -> float | None:
    if model.jumps is None or not hasattr(model.jumps, "nodes") or model.jumps.positive_support:
        return None
    k, _ = model.jumps.nodes()
    return float(np.min(np.abs(k)))


def solve_pide_scaled(
    spec: ProblemSpec,
    hbar: float,
    L: float,
    n: int,
    dt: float,
    theta: float = 0.5,
    store_every: int | None = None,
    points_per_width: float = 8.0,
) -> GridSolution:
    """Solve ``hbar du/dtau = (hbar^2 sigma2/2) u'' + hbar b u' + int(...) - U u`` at this ``hbar``.

    Raises :class:`ResolutionError` when the grid has fewer than
    ``points_per_width`` points per diffusion width ``sqrt(hbar * var_rate)``.
    """
    model = spec.model.with_hbar(hbar)
    h = 2 * L / (n - 1)
    var_rate = model.variance_rate
    if var_rate > 0:
        width = math.sqrt(hbar * var_rate)
        if h > width / points_per_width:
            raise ResolutionError(
                f"grid spacing {h:.3g} exceeds sqrt(hbar)-width {width:.3g}/{points_per_width:g} at hbar={hbar:g}"
            )
    atom = _atom_step(model)
    if atom is not None:
        ratio = hbar * atom / h
        if abs(ratio - round(ratio)) > 1e-9:
            warnings.warn(
                f"grid spacing {h:.4g} does not divide hbar*alpha={hbar * atom:.4g}; using interpolation",
                stacklevel=2,
            )
    return solve_pide(spec.with_model(model), L, n, dt, theta, store_every)


def auto_grid(
    spec: ProblemSpec,
    hbar: float,
    p: float,
    points_per_width: float = 16.0,
    margin: float = 6.0,
    extent: float = 0.0,
) -> tuple[float, int, float]:
    """Grid ``(L, n, dt)`` for a scaled solve evaluated at ``p``.

    ``L`` keeps ``|p| + extent + margin * sqrt(hbar v tau)`` inside ``[-L/2, L/2]``
    (``extent`` bounds the minimiser excursion); the spacing resolves the
    diffusion width and, for atomic jumps, divides ``hbar * alpha``.
    """
    model = spec.model.with_hbar(hbar)
    v = max(model.variance_rate, 1e-12)
    tau = spec.horizon
    width = math.sqrt(hbar * v)
    h = width / points_per_width
    atom = _atom_step(model)
    if atom is not None:
        jump = hbar * atom
        h = jump / math.ceil(jump / h - 1e-9)
    half = 2.0 * (abs(p) + extent + margin * math.sqrt(hbar * v * tau))
    m = int(math.ceil(half / h))
    L = m * h
    n = 2 * m + 1
    dt = tau / max(200, int(math.ceil(tau / 2e-3)))
    return L, n, dt


@dataclass
class ConvergenceReport:
    parameter: list[float]
    errors: list[float]
    orders: list[float]
    regime_reached: bool
    message: str = ""

    @property
    def order(self) -> float:
        return self.orders[-1]


def refine_order(
    spec: ProblemSpec,
    ladder,
    kind: str = "space",
    L: float = 8.0,
    n: int = 401,
    dt: float = 1e-3,
    theta: float = 0.5,
    window: float | None = None,
) -> ConvergenceReport:
    """Observed convergence order from successive differences on a refinement ladder.

    ``kind="space"``: ``ladder`` lists point counts with ``n_{k+1} - 1 = 2 (n_k - 1)``
    (time step ``dt`` fixed). ``kind="time"``: ``ladder`` lists halving time
    steps on the fixed ``n``-point grid. Errors are sup-norms of consecutive
    differences on the coarsest grid, restricted to ``|p| <= window``.
    """
    ladder = list(ladder)
    if len(ladder) < 3:
        raise ValueError("need at least 3 grids")
    finals = []
    for val in ladder:
        if kind == "space":
            sol = solve_pide(spec, L, int(val), dt, theta, store_every=10**9)
        elif kind == "time":
            sol = solve_pide(spec, L, n, float(val), theta, store_every=10**9)
        else:
            raise ValueError("kind must be 'space' or 'time'")
        finals.append((sol.p, sol.final))
    coarse_p = finals[0][0]
    mask = np.ones_like(coarse_p, dtype=bool) if window is None else np.abs(coarse_p) <= window

    def on_coarse(p, u):
        idx = np.searchsorted(p, coarse_p)
        idx = np.clip(idx, 0, len(p) - 1)
        if not np.allclose(p[idx], coarse_p, atol=1e-9):
            raise ValueError("space ladder must nest: n_{k+1} - 1 = 2 (n_k - 1)")
        return u[idx]

    vals = [on_coarse(p, u)[mask] for p, u in finals]
    errors = [float(np.max(np.abs(vals[k] - vals[k + 1]))) for k in range(len(vals) - 1)]
    ratios = [float(ladder[k] / ladder[k + 1]) if kind == "time" else float((ladder[k + 1] - 1) / (ladder[k] - 1))
              for k in range(len(ladder) - 1)]
    orders = [math.log(errors[k] / errors[k + 1]) / math.log(ratios[k + 1]) for k in range(len(errors) - 1)]
    monotone = all(errors[k + 1] < errors[k] for k in range(len(errors) - 1))
    msg = "" if monotone else "asymptotic regime not reached"
    return ConvergenceReport([float(x) for x in ladder], errors, orders, monotone, msg)
