"""Monte Carlo evaluation of the Feynman-Kac representation.

For a problem with model ``xi`` (possibly hbar-scaled), rate ``U`` and data
``g`` the engine estimates

    u(t, p) = E[ g(xi_t) exp(-hbar^{-1} int_0^t U(xi_s) ds) | xi_0 = p ].

Every path contributes the log-weight ``log g(xi_t) - hbar^{-1} int U``;
block results are combined with a max-shifted log-sum-exp so that weights
like ``e^{-100}`` at small hbar do not underflow. The time integral is the
trapezoid rule on the jump-augmented grid with left/right limits at jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._blocks import DEFAULT_BLOCK_SIZE, map_blocks
from .errors import ConfigError, DegenerateError
from .levy_core import apply_generator, simulate_paths
from .problem import ProblemSpec

__all__ = [
    "MCParams",
    "MCEstimate",
    "SemigroupResidual",
    "DriftEstimate",
    "fk_estimate",
    "fk_estimate_many",
    "semigroup_residual",
    "drift_estimate",
]


@dataclass(frozen=True)
class MCParams:
    n_paths: int = 100_000
    dt: float = 1e-3
    seed: int = 0
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        if self.n_paths < 2:
            raise ValueError("n_paths must be >= 2")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error (``sample std / sqrt(n)``)."""

    mean: float
    stderr: float
    n_paths: int
    dt: float
    seed: int
    log_mean: float = float("nan")

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_sigma * self.stderr


class _LogAccumulator:
    """Streaming sums of ``exp(lw)`` and ``exp(2 lw)`` kept relative to a running max."""

    __slots__ = ("m", "s1", "s2", "n")

    def __init__(self):
        self.m = -math.inf
        self.s1 = 0.0
        self.s2 = 0.0
        self.n = 0

    @classmethod
    def of(cls, lw: np.ndarray) -> "_LogAccumulator":
        acc = cls()
        if not np.all(np.isfinite(lw) | (lw == -np.inf)):
            raise ConfigError("Feynman-Kac log-weight overflowed; check that the rate is bounded below")
        acc.n = lw.size
        m = float(lw.max()) if lw.size else -math.inf
        acc.m = m
        if m > -math.inf:
            e = np.exp(lw - m)
            acc.s1 = float(e.sum())
            acc.s2 = float((e * e).sum())
        return acc

    def merge(self, other: "_LogAccumulator") -> None:
        if other.m > self.m:
            scale = math.exp(self.m - other.m) if self.m > -math.inf else 0.0
            self.s1 = self.s1 * scale + other.s1
            self.s2 = self.s2 * scale * scale + other.s2
            self.m = other.m
        elif other.m > -math.inf:
            scale = math.exp(other.m - self.m)
            self.s1 += other.s1 * scale
            self.s2 += other.s2 * scale * scale
        self.n += other.n

    def estimate(self, dt: float, seed: int) -> MCEstimate:
        n = self.n
        if self.m == -math.inf or self.s1 == 0.0:
            return MCEstimate(0.0, 0.0, n, dt, seed, -math.inf)
        mean_rel = self.s1 / n
        var_rel = max(self.s2 / n - mean_rel**2, 0.0) * n / (n - 1)
        log_mean = self.m + math.log(mean_rel)
        mean = math.exp(log_mean) if log_mean < 709 else math.inf
        stderr = math.exp(self.m) * math.sqrt(var_rel / n) if self.m < 709 else math.inf
        return MCEstimate(mean, stderr, n, dt, seed, log_mean)


def _log_weights(spec: ProblemSpec, batch, p: float) -> np.ndarray:
    hbar = spec.hbar
    integral = batch.integral(spec.rate, shift=p)
    return spec.data.log_value(p + batch.terminal, hbar) - integral / hbar


def _common_model(specs: Sequence[ProblemSpec]):
    model = specs[0].model
    for s in specs[1:]:
        if s.model != model:
            raise ValueError("all specs must share one model")
    return model


def fk_estimate_many(
    specs: Sequence[ProblemSpec],
    points: Sequence[float],
    mc: MCParams,
    t: float | None = None,
) -> list[list[MCEstimate]]:
    """Estimates for several (rate, data) pairs and start points on common paths.

    Returns ``out[i][j]`` for ``specs[i]`` started at ``points[j]``. All
    specs must share the model and the elapsed time at ``t``.
    """
    specs = list(specs)
    model = _common_model(specs)
    elapsed = {s.elapsed(t) for s in specs}
    if len(elapsed) != 1:
        raise ValueError("all specs must share the elapsed time")
    tau = elapsed.pop()
    points = [float(p) for p in points]
    for s in specs:
        s.check_admissible()
    if tau == 0.0:
        out = []
        for s in specs:
            row = []
            for p in points:
                lg = float(s.data.log_value(p, s.hbar))
                row.append(MCEstimate(math.exp(lg), 0.0, mc.n_paths, mc.dt, mc.seed, lg))
            out.append(row)
        return out
    dt = min(mc.dt, tau)

    def block(_i, size, rng):
        batch = simulate_paths(model, tau, dt, size, rng)
        return [[_LogAccumulator.of(_log_weights(s, batch, p)) for p in points] for s in specs]

    parts = map_blocks(block, mc.n_paths, mc.seed, mc.block_size)
    total = parts[0]
    for part in parts[1:]:
        for i in range(len(specs)):
            for j in range(len(points)):
                total[i][j].merge(part[i][j])
    return [[acc.estimate(mc.dt, mc.seed) for acc in row] for row in total]


def fk_estimate(spec: ProblemSpec, p: float, mc: MCParams, t: float | None = None) -> MCEstimate:
    """Monte Carlo estimate of ``u(t, p)`` (``t`` defaults to the horizon)."""
    return fk_estimate_many([spec], [p], mc, t)[0][0]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemigroupResidual:
    """``|lhs - rhs|`` of ``T_t g(x) - g(x) = int_0^t T_s (A g - U g)(x) ds``."""

    value: float
    stderr: float
    lhs: float
    rhs: float


def semigroup_residual(
    spec: ProblemSpec,
    x: float,
    t: float,
    quad_points: int = 8,
    mc: MCParams = MCParams(n_paths=20_000),
    fd_step: float = 1e-3,
) -> SemigroupResidual:
    """Residual of the semigroup identity at ``x`` with both sides on common paths.

    The ``s``-integral uses Gauss-Legendre nodes; each node is inserted in
    the path grid so ``T_s`` is evaluated without interpolation.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return SemigroupResidual(0.0, 0.0, 0.0, 0.0)
    if not spec.data.decays:
        raise ConfigError("semigroup residual needs rapidly decreasing data")
    hbar = spec.hbar
    model = spec.model
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    s_nodes = 0.5 * t * (nodes + 1.0)
    s_weights = 0.5 * t * weights
    g = lambda y: spec.data.value(y, hbar)
    g_x = float(g(np.array([x]))[0])

    def killed_generator(y):
        return apply_generator(model, g, y, fd_step=fd_step) - spec.rate(y) * g(y) / hbar

    def block(_i, size, rng):
        batch = simulate_paths(model, t, min(mc.dt, t), size, rng, p0=x, extra_times=s_nodes)
        cum = batch.cumulative_integral(spec.rate)
        lhs = g(batch.terminal) * np.exp(-cum[:, -1] / hbar) - g_x
        rhs = np.zeros(size)
        for s, w in zip(s_nodes, s_weights):
            j = int(np.searchsorted(batch.grid, s))
            rhs += w * killed_generator(batch.at_grid(j)) * np.exp(-cum[:, j] / hbar)
        d = lhs - rhs
        return np.array([lhs.sum(), rhs.sum(), d.sum(), (d * d).sum()])

    sums = np.sum(map_blocks(block, mc.n_paths, mc.seed, mc.block_size), axis=0)
    n = mc.n_paths
    mean_d = sums[2] / n
    var_d = max(sums[3] / n - mean_d**2, 0.0) * n / (n - 1)
    return SemigroupResidual(abs(mean_d), math.sqrt(var_d / n), sums[0] / n, sums[1] / n)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftEstimate:
    value: float
    stderr: float
    log_u: tuple[float, float, float]
    n_paths: int
    seed: int


def drift_estimate(
    spec: ProblemSpec,
    hbar: float | None,
    t: float | None,
    p: float,
    dp: float,
    mc: MCParams,
    groups_per_block: int = 10,
) -> DriftEstimate:
    """``hbar (u(p+dp) - u(p-dp)) / (2 dp u(p))`` with common random numbers.

    The three evaluations share every path (shifted start); the standard
    error is a delete-one-group jackknife over contiguous path groups.
    """
    if not dp > 0:
        raise ValueError("dp must be > 0")
    if hbar is not None:
        spec = spec.with_model(spec.model.with_hbar(hbar))
    if spec.model.hbar is None:
        raise ConfigError("drift_estimate needs a scaled (hbar) model")
    h = spec.hbar
    tau = spec.elapsed(t)
    if tau <= 0:
        raise ValueError("elapsed time must be > 0")
    points = (p - dp, p, p + dp)

    def block(_i, size, rng):
        batch = simulate_paths(spec.model, tau, min(mc.dt, tau), size, rng)
        lws = np.stack([_log_weights(spec, batch, q) for q in points])
        if not np.all(np.isfinite(lws)):
            raise ConfigError("Feynman-Kac log-weight overflowed")
        chunks = np.array_split(np.arange(size), min(groups_per_block, size))
        m = np.array([[lws[k, c].max() for c in chunks] for k in range(3)])
        s = np.array([[np.exp(lws[k, c] - m[k, g]).sum() for g, c in enumerate(chunks)] for k in range(3)])
        return m, s

    parts = map_blocks(block, mc.n_paths, mc.seed, mc.block_size)
    m = np.concatenate([pm for pm, _ in parts], axis=1)
    s = np.concatenate([ps for _, ps in parts], axis=1)
    top = m.max(axis=1, keepdims=True)
    scaled = s * np.exp(m - top)  # (3, n_groups), common scale per point
    n = mc.n_paths
    log_u = tuple(float(top[k, 0] + math.log(scaled[k].sum() / n)) for k in range(3))
    if log_u[1] < math.log(10 * np.finfo(float).eps):
        raise DegenerateError(f"u(p) = exp({log_u[1]:.3g}) is below 10 machine epsilon")

    def ratio(tot):
        up = math.exp(top[2, 0] - top[1, 0]) * tot[2] / tot[1]
        um = math.exp(top[0, 0] - top[1, 0]) * tot[0] / tot[1]
        return h * (up - um) / (2 * dp)

    totals = scaled.sum(axis=1)
    value = ratio(totals)
    n_groups = scaled.shape[1]
    loo = np.array([ratio(totals - scaled[:, g]) for g in range(n_groups)])
    var = (n_groups - 1) / n_groups * np.sum((loo - loo.mean()) ** 2)
    return DriftEstimate(float(value), float(math.sqrt(var)), log_u, n, mc.seed)
