"""Lévy triplets, characteristic exponents, generators and path simulation.

A model is the triplet ``(b, sigma2, jumps)`` plus an optional semiclassical
parameter ``hbar``. In the scaled regime the simulated process has drift ``b``,
diffusion ``hbar * sigma2``, jump sizes ``hbar * k`` and jump intensity
``mass / hbar``; the generator is

    A f(p) = b f'(p) + (hbar sigma2 / 2) f''(p)
             + hbar^{-1} * sum/int (f(p + hbar k) - f(p)) nu(dk).

Jump measures are finite (the gamma density is truncated to ``[eps, cutoff]``),
so every path is a Brownian motion with drift plus a compound Poisson process.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate, sparse

from ._blocks import DEFAULT_BLOCK_SIZE, map_blocks, substream
from .errors import BoundaryTruncationWarning, ConfigError

__all__ = [
    "TwoPoint",
    "FiniteAtomic",
    "GammaDensity",
    "JumpMeasure",
    "LevyModel",
    "SamplePath",
    "PathBatch",
    "MomentEstimate",
    "characteristic_exponent",
    "characteristic_exponent_complex",
    "generator_matrix",
    "apply_generator",
    "simulate_paths",
    "sample_path",
    "sample_scaled_brownian",
    "analytic_moment",
    "empirical_moments",
]


# ---------------------------------------------------------------------------
# jump measures


@dataclass(frozen=True)
class TwoPoint:
    """``(mass/2) (delta_alpha + delta_{-alpha})``."""

    alpha: float
    mass: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError("jumps.alpha must be > 0")
        if not self.mass > 0:
            raise ConfigError("jumps.mass must be > 0")

    @property
    def total_mass(self) -> float:
        return float(self.mass)

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def positive_support(self) -> bool:
        return False

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * self.mass
        return np.array([self.alpha, -self.alpha]), np.array([half, half])

    def moment(self, n: int) -> float:
        return float(self.mass * self.alpha**n) if n % 2 == 0 else 0.0

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        signs = rng.integers(0, 2, size=size) * 2 - 1
        return self.alpha * signs.astype(float)


@dataclass(frozen=True)
class FiniteAtomic:
    """Finite symmetric sum of point masses ``sum_i w_i delta_{k_i}``."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(k), float(w)) for k, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ConfigError("jumps.atoms must not be empty")
        for k, w in atoms:
            if k == 0.0:
                raise ConfigError("jumps.atoms: jump size 0 is not allowed")
            if not w > 0:
                raise ConfigError("jumps.atoms: rates must be > 0")
        weights = {}
        for k, w in atoms:
            weights[k] = weights.get(k, 0.0) + w
        for k, w in weights.items():
            if not math.isclose(weights.get(-k, 0.0), w, rel_tol=1e-12, abs_tol=0.0):
                raise ConfigError(f"jumps.atoms must be symmetric; atom {k} has no mirror")

    @property
    def total_mass(self) -> float:
        return float(sum(w for _, w in self.atoms))

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def positive_support(self) -> bool:
        return False

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.array([a[0] for a in self.atoms])
        w = np.array([a[1] for a in self.atoms])
        return k, w

    def moment(self, n: int) -> float:
        k, w = self.nodes()
        return float(np.sum(w * k**n))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        k, w = self.nodes()
        return k[rng.choice(len(k), size=size, p=w / w.sum())]


@dataclass(frozen=True)
class GammaDensity:
    """``e^{-k}/k dk`` restricted to ``[eps, cutoff]`` (gamma subordinator)."""

    eps: float = 1e-4
    cutoff: float = 30.0
    n_nodes: int = 256

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("jumps.eps must be > 0")
        if not self.cutoff > self.eps:
            raise ConfigError("jumps.cutoff must exceed jumps.eps")
        if self.n_nodes < 2:
            raise ConfigError("jumps.n_nodes must be >= 2")

    @cached_property
    def total_mass(self) -> float:
        # log substitution removes the 1/k singularity at eps
        val, _ = integrate.quad(
            lambda y: math.exp(-math.exp(y)), math.log(self.eps), math.log(self.cutoff), limit=200
        )
        return float(val)

    @property
    def symmetric(self) -> bool:
        return False

    @property
    def positive_support(self) -> bool:
        return True

    @cached_property
    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        # composite midpoint rule in y = log k
        edges = np.linspace(math.log(self.eps), math.log(self.cutoff), self.n_nodes + 1)
        dy = edges[1] - edges[0]
        k = np.exp(0.5 * (edges[:-1] + edges[1:]))
        return k, dy * np.exp(-k)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        k, w = self._nodes
        return k.copy(), w.copy()

    def moment(self, n: int) -> float:
        if n == 0:
            return self.total_mass
        val, _ = integrate.quad(lambda k: k ** (n - 1) * math.exp(-k), self.eps, self.cutoff, limit=200)
        return float(val)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        # log-uniform proposal (density ∝ 1/k) accepted with probability e^{-k}
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape))
        out = np.empty(n)
        lo, hi = math.log(self.eps), math.log(self.cutoff)
        filled = 0
        while filled < n:
            want = max(16, int(1.6 * (n - filled)))
            k = np.exp(rng.uniform(lo, hi, size=want))
            k = k[rng.uniform(size=want) < np.exp(-k)]
            take = min(len(k), n - filled)
            out[filled : filled + take] = k[:take]
            filled += take
        return out.reshape(shape)


JumpMeasure = Union[TwoPoint, FiniteAtomic, GammaDensity, None]


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class LevyModel:
    """Lévy triplet with an optional semiclassical scaling ``hbar``."""

    b: float = 0.0
    sigma2: float = 0.0
    jumps: JumpMeasure = None
    hbar: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.b):
            raise ConfigError("drift must be finite")
        if not (np.isfinite(self.sigma2) and self.sigma2 >= 0):
            raise ConfigError("sigma2 must be >= 0")
        if self.hbar is not None and not self.hbar > 0:
            raise ConfigError("hbar must be > 0")
        if isinstance(self.jumps, GammaDensity) and not self.is_subordinator:
            raise ConfigError("gamma jump measure requires a subordinator (drift >= 0, sigma2 = 0)")

    @property
    def is_subordinator(self) -> bool:
        positive = self.jumps is None or self.jumps.positive_support
        return self.b >= 0 and self.sigma2 == 0 and positive

    @property
    def symmetric(self) -> bool:
        return self.jumps is None or self.jumps.symmetric

    @property
    def scale(self) -> float:
        return 1.0 if self.hbar is None else float(self.hbar)

    def unscaled(self) -> "LevyModel":
        return LevyModel(self.b, self.sigma2, self.jumps, None)

    def with_hbar(self, hbar: float | None) -> "LevyModel":
        return LevyModel(self.b, self.sigma2, self.jumps, hbar)

    # quantities of the simulated (possibly scaled) process
    @property
    def eff_sigma2(self) -> float:
        return self.scale * self.sigma2

    @property
    def jump_rate(self) -> float:
        return 0.0 if self.jumps is None else self.jumps.total_mass / self.scale

    def eff_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Jump sizes and rates of the simulated process (quadrature for densities)."""
        if self.jumps is None:
            return np.empty(0), np.empty(0)
        k, w = self.jumps.nodes()
        return self.scale * k, w / self.scale

    def eff_cumulant(self, n: int) -> float:
        """n-th cumulant per unit time of the simulated process."""
        h = self.scale
        jump = 0.0 if self.jumps is None else self.jumps.moment(n) * h ** (n - 1)
        if n == 1:
            return self.b + jump
        if n == 2:
            return h * self.sigma2 + jump
        return jump

    @property
    def variance_rate(self) -> float:
        """``sigma2 + int k^2 nu(dk)`` of the unscaled triplet."""
        return self.sigma2 + (0.0 if self.jumps is None else self.jumps.moment(2))

    def hash(self) -> str:
        import hashlib
        import json

        return hashlib.sha256(json.dumps(model_to_dict(self), sort_keys=True).encode()).hexdigest()[:16]


def model_to_dict(model: LevyModel) -> dict:
    j = model.jumps
    if j is None:
        jumps = {"kind": "none"}
    elif isinstance(j, TwoPoint):
        jumps = {"kind": "two_point", "alpha": j.alpha, "mass": j.mass}
    elif isinstance(j, FiniteAtomic):
        jumps = {"kind": "atoms", "atoms": [list(a) for a in j.atoms]}
    else:
        jumps = {"kind": "gamma", "eps": j.eps, "cutoff": j.cutoff, "n_nodes": j.n_nodes}
    out = {"drift": model.b, "sigma2": model.sigma2, "jumps": jumps}
    if model.hbar is not None:
        out["hbar"] = model.hbar
    return out


# ---------------------------------------------------------------------------
# characteristic exponent and generator


def _jump_exponent(jumps, x: float, part: str) -> float:
    if jumps is None:
        return 0.0
    fn = (lambda k: 1.0 - math.cos(x * k)) if part == "real" else (lambda k: math.sin(x * k))
    if isinstance(jumps, GammaDensity):
        val, _ = integrate.quad(
            lambda y: fn(math.exp(y)) * math.exp(-math.exp(y)),
            math.log(jumps.eps),
            math.log(jumps.cutoff),
            limit=400,
        )
        return float(val)
    k, w = jumps.nodes()
    return float(sum(wi * fn(ki) for ki, wi in zip(k, w)))


def characteristic_exponent_complex(model: LevyModel, x: float) -> complex:
    """``V(x)`` with ``E exp(-i x xi_t) = exp(-t V(x))`` for the unscaled triplet."""
    x = float(x)
    re = 0.5 * model.sigma2 * x * x + _jump_exponent(model.jumps, x, "real")
    im = model.b * x + _jump_exponent(model.jumps, x, "imag")
    return complex(re, im)


def characteristic_exponent(model: LevyModel, x: float) -> float:
    """Real part of the characteristic exponent.

    For symmetric jump measures and ``b = 0`` this is the whole exponent,
    ``sigma2 x^2 / 2 + int (1 - cos(x k)) nu(dk)``. The drift and any
    asymmetric jump contribution live in the imaginary part, available from
    :func:`characteristic_exponent_complex`.
    """
    return characteristic_exponent_complex(model, x).real


def _check_uniform(grid: np.ndarray) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ValueError("grid must be a 1-D array with at least 3 points")
    h = (grid[-1] - grid[0]) / (len(grid) - 1)
    if not h > 0 or not np.allclose(np.diff(grid), h, rtol=1e-8, atol=1e-12):
        raise ValueError("grid must be uniform and increasing")
    return float(h)


def _interp_matrix(n: int, pos: np.ndarray, rows: np.ndarray, weights: np.ndarray):
    """COO triplets for linear interpolation at fractional grid positions; off-grid -> 0."""
    i0 = np.floor(pos + 1e-9).astype(np.int64)
    frac = pos - i0
    frac[np.abs(frac) < 1e-9] = 0.0
    r, c, v = [], [], []
    for idx, f in ((i0, 1.0 - frac), (i0 + 1, frac)):
        ok = (idx >= 0) & (idx < n) & (f != 0.0)
        r.append(rows[ok])
        c.append(idx[ok])
        v.append(weights[ok] * f[ok])
    outside = ((i0 < 0) | (i0 >= n)) | ((i0 + 1 >= n) & (frac != 0.0))
    return np.concatenate(r), np.concatenate(c), np.concatenate(v), bool(outside.any())


def generator_matrix(model: LevyModel, grid, drift_scheme: str = "central", with_flag: bool = False):
    """Sparse matrix of the (scaled) generator on a uniform grid, zero outside it.

    Diffusion uses second-order central differences, drift central or
    first-order upwind differences, and each jump node contributes
    ``w (f(p + k) - f(p))`` with linear interpolation for off-grid shifts.
    """
    h = _check_uniform(grid)
    n = len(grid)
    b = model.b
    d = 0.5 * model.eff_sigma2 / h**2
    main = np.full(n, -2.0 * d)
    upper = np.full(n - 1, d)
    lower = np.full(n - 1, d)
    if b != 0.0:
        if drift_scheme == "central":
            upper += b / (2 * h)
            lower -= b / (2 * h)
        elif drift_scheme == "upwind":
            if b > 0:
                main -= b / h
                upper += b / h
            else:
                main += b / h
                lower -= b / h
        else:
            raise ValueError(f"unknown drift scheme {drift_scheme!r}")
    mat = sparse.diags([lower, main, upper], [-1, 0, 1], shape=(n, n), format="csr")
    truncated = False
    ks, ws = model.eff_nodes()
    if len(ks):
        rows_all, cols_all, vals_all = [], [], []
        base = np.arange(n)
        for k, w in zip(ks, ws):
            pos = base + k / h
            r, c, v, out = _interp_matrix(n, pos, base, np.full(n, w))
            truncated |= out
            rows_all.append(r)
            cols_all.append(c)
            vals_all.append(v)
        jump = sparse.coo_matrix(
            (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))), shape=(n, n)
        ).tocsr()
        mat = mat + jump - sparse.diags(np.full(n, ws.sum()), 0, shape=(n, n))
    mat = mat.tocsr()
    return (mat, truncated) if with_flag else mat


def _shift_values(values: np.ndarray, grid: np.ndarray, shift: float, extrapolation: str):
    x = grid + shift
    out = np.interp(x, grid, values)
    left = x < grid[0] - 1e-12
    right = x > grid[-1] + 1e-12
    if extrapolation == "zero":
        out[left | right] = 0.0
    elif extrapolation == "linear":
        h = grid[1] - grid[0]
        sl = (values[1] - values[0]) / h
        sr = (values[-1] - values[-2]) / h
        out[left] = values[0] + sl * (x[left] - grid[0])
        out[right] = values[-1] + sr * (x[right] - grid[-1])
    else:
        raise ValueError(f"unknown extrapolation {extrapolation!r}")
    return out, bool((left | right).any())


def apply_generator(
    model: LevyModel,
    f: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
    grid,
    extrapolation: str = "zero",
    fd_step: float | None = None,
) -> np.ndarray:
    """Apply the generator ``A`` of ``model`` to ``f`` at the points ``grid``.

    ``f`` is either a callable (evaluated exactly at shifted points, with
    derivatives by central differences of step ``fd_step``) or an array of
    values on the uniform ``grid``. Array values are extended outside the
    grid by ``extrapolation``: ``"zero"`` (decaying data; shifts leaving the
    grid emit :class:`BoundaryTruncationWarning`) or ``"linear"``.
    """
    grid = np.asarray(grid, dtype=float)
    ks, ws = model.eff_nodes()
    b, s2 = model.b, model.eff_sigma2
    if callable(f):
        h = fd_step if fd_step is not None else (_check_uniform(grid) if len(grid) > 2 else 1e-3)
        f0 = np.asarray(f(grid), dtype=float)
        out = np.zeros_like(f0)
        if b != 0.0 or s2 != 0.0:
            fp, fm = np.asarray(f(grid + h), float), np.asarray(f(grid - h), float)
            out += b * (fp - fm) / (2 * h) + 0.5 * s2 * (fp - 2 * f0 + fm) / h**2
        for k, w in zip(ks, ws):
            out += w * (np.asarray(f(grid + k), float) - f0)
        return out
    values = np.asarray(f, dtype=float)
    h = _check_uniform(grid)
    if values.shape != grid.shape:
        raise ValueError("values and grid must have the same shape")
    out = np.zeros_like(values)
    truncated = False
    if b != 0.0 or s2 != 0.0:
        fp, t1 = _shift_values(values, grid, h, extrapolation)
        fm, t2 = _shift_values(values, grid, -h, extrapolation)
        out += b * (fp - fm) / (2 * h) + 0.5 * s2 * (fp - 2 * values + fm) / h**2
        truncated |= t1 or t2
    for k, w in zip(ks, ws):
        fk, t = _shift_values(values, grid, k, extrapolation)
        out += w * (fk - values)
        truncated |= t
    if truncated and extrapolation == "zero":
        warnings.warn(
            "nonlocal shift left the grid; values outside treated as zero",
            BoundaryTruncationWarning,
            stacklevel=2,
        )
    return out


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class SamplePath:
    """One realised trajectory on its jump-augmented time grid.

    ``values`` are the càdlàg values (after any jump at that instant) and
    ``left`` the left limits; they differ only at jump instants.
    """

    times: np.ndarray
    values: np.ndarray
    left: np.ndarray
    seed: int | None = None

    @property
    def jump_times(self) -> np.ndarray:
        return self.times[self.values != self.left]


@dataclass
class PathBatch:
    """A block of paths sharing one regular grid, augmented with jump instants.

    ``times``, ``left`` and ``right`` have shape ``(n_paths, n_nodes)``;
    padding nodes sit at the horizon with zero length. ``grid_index[i, j]``
    is the column of regular grid node ``j`` in row ``i``.
    """

    grid: np.ndarray
    times: np.ndarray
    left: np.ndarray
    right: np.ndarray
    grid_index: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.right.shape[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.right[:, -1]

    def at_grid(self, j: int) -> np.ndarray:
        return np.take_along_axis(self.right, self.grid_index[:, j : j + 1], axis=1)[:, 0]

    def segment_lengths(self) -> np.ndarray:
        return np.diff(self.times, axis=1)

    def integral(self, func: Callable[[np.ndarray], np.ndarray], shift: float = 0.0) -> np.ndarray:
        """Trapezoid of ``func(shift + X_s)`` over ``[0, t]``, jump-side aware."""
        dt = self.segment_lengths()
        return 0.5 * np.sum((func(self.right[:, :-1] + shift) + func(self.left[:, 1:] + shift)) * dt, axis=1)

    def cumulative_integral(self, func, shift: float = 0.0) -> np.ndarray:
        """Running trapezoid integral evaluated at each regular grid node."""
        dt = self.segment_lengths()
        seg = 0.5 * (func(self.right[:, :-1] + shift) + func(self.left[:, 1:] + shift)) * dt
        run = np.concatenate([np.zeros((seg.shape[0], 1)), np.cumsum(seg, axis=1)], axis=1)
        return np.take_along_axis(run, self.grid_index, axis=1)


def _make_grid(t: float, dt: float, extra_times: Sequence[float] | None = None) -> np.ndarray:
    if not (t > 0 and np.isfinite(t)):
        raise ValueError("horizon t must be > 0")
    if not (dt > 0 and np.isfinite(dt)):
        raise ValueError("step dt must be > 0")
    if dt > t * (1 + 1e-12):
        raise ValueError("dt must not exceed t")
    n = max(1, int(math.ceil(t / dt - 1e-9)))
    grid = np.linspace(0.0, t, n + 1)
    if extra_times is not None and len(extra_times):
        extra = np.asarray(extra_times, dtype=float)
        if np.any(extra < 0) or np.any(extra > t):
            raise ValueError("observation times must lie in [0, t]")
        grid = np.unique(np.concatenate([grid, extra]))
    return grid


def simulate_paths(
    model: LevyModel,
    t: float,
    dt: float,
    n_paths: int,
    rng: np.random.Generator,
    p0: float = 0.0,
    extra_times: Sequence[float] | None = None,
) -> PathBatch:
    """Simulate ``n_paths`` paths on ``[0, t]`` with jumps inserted at their exact times.

    Brownian increments are drawn exactly on every segment of the augmented
    grid, so the result is an exact sample of the process at all nodes.
    """
    grid = _make_grid(t, dt, extra_times)
    n_grid = len(grid)
    rate = model.jump_rate
    if rate > 0:
        counts = rng.poisson(rate * t, size=n_paths)
        max_j = int(counts.max()) if n_paths else 0
    else:
        counts = np.zeros(n_paths, dtype=np.int64)
        max_j = 0
    if max_j > 0:
        jt = rng.uniform(0.0, t, size=(n_paths, max_j))
        js = model.scale * model.jumps.sample(rng, (n_paths, max_j))
        pad = np.arange(max_j)[None, :] >= counts[:, None]
        jt[pad] = t
        js[pad] = 0.0
        all_t = np.concatenate([np.broadcast_to(grid, (n_paths, n_grid)), jt], axis=1)
        all_j = np.concatenate([np.zeros((n_paths, n_grid)), js], axis=1)
        order = np.argsort(all_t, axis=1, kind="stable")
        times = np.take_along_axis(all_t, order, axis=1)
        jumps = np.take_along_axis(all_j, order, axis=1)
        inv = np.argsort(order, axis=1, kind="stable")
        grid_index = inv[:, :n_grid]
    else:
        times = np.broadcast_to(grid, (n_paths, n_grid))
        jumps = None
        grid_index = np.broadcast_to(np.arange(n_grid), (n_paths, n_grid))
    seg = np.diff(times, axis=1)
    incr = model.b * seg
    if model.eff_sigma2 > 0:
        incr = incr + np.sqrt(model.eff_sigma2 * seg) * rng.standard_normal(seg.shape)
    cont = np.concatenate([np.zeros((n_paths, 1)), np.cumsum(incr, axis=1)], axis=1)
    if jumps is None:
        right = p0 + cont
        left = right
    else:
        cj = np.cumsum(jumps, axis=1)
        right = p0 + cont + cj
        left = right - jumps
    return PathBatch(grid=grid, times=times, left=left, right=right, grid_index=grid_index)


def sample_path(model: LevyModel, t: float, dt: float, p0: float = 0.0, seed: int = 0) -> SamplePath:
    """Single path of ``model`` started at ``p0``; reproducible from ``seed``."""
    batch = simulate_paths(model, t, dt, 1, substream(seed, 0), p0=p0)
    times = np.asarray(batch.times[0])
    keep = np.concatenate([[True], np.diff(times) > 0])
    # a padding node shares the horizon with the last grid node: keep the final state
    idx = np.flatnonzero(keep)
    right = batch.right[0][idx]
    right[-1] = batch.right[0, -1]
    return SamplePath(times=times[idx].copy(), values=right, left=batch.left[0][idx].copy(), seed=seed)


def sample_scaled_brownian(hbar: float, t: float, dt: float, seed: int = 0) -> SamplePath:
    """Path of ``sqrt(hbar) W`` started at 0."""
    return sample_path(LevyModel(0.0, 1.0, None, hbar), t, dt, 0.0, seed)


# ---------------------------------------------------------------------------
# moments


def analytic_moment(model: LevyModel, t: float, m: int) -> float:
    """``E[(xi_t - xi_0)^m]`` from the cumulants ``t * kappa_n``."""
    kappa = [t * model.eff_cumulant(n) for n in range(1, m + 1)]
    mom = [1.0]
    for n in range(1, m + 1):
        mom.append(sum(math.comb(n - 1, j) * kappa[j] * mom[n - 1 - j] for j in range(n)))
    return mom[m]


@dataclass(frozen=True)
class MomentEstimate:
    t_grid: np.ndarray
    order: int
    moments: np.ndarray
    stderr: np.ndarray
    n_paths: int
    seed: int

    @property
    def argsup(self) -> int:
        return int(np.argmax(self.moments))

    @property
    def sup(self) -> float:
        return float(self.moments[self.argsup])

    @property
    def sup_stderr(self) -> float:
        return float(self.stderr[self.argsup])


def empirical_moments(
    model: LevyModel,
    t_grid: Sequence[float],
    m: int,
    n_paths: int,
    seed: int = 0,
    dt: float | None = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> MomentEstimate:
    """Monte Carlo m-th moments of ``xi_t - xi_0`` on ``t_grid`` (even ``m`` only)."""
    if m < 2 or m % 2:
        raise ValueError("only even moment orders m >= 2 are supported")
    t_grid = np.asarray(sorted(set(float(s) for s in t_grid)))
    if len(t_grid) == 0 or t_grid[0] < 0 or t_grid[-1] > 1:
        raise ValueError("t_grid must be a non-empty subset of [0, 1]")
    horizon = float(t_grid[-1]) if t_grid[-1] > 0 else 1.0
    step = dt if dt is not None else min(0.01, horizon)

    def block(_i, size, rng):
        batch = simulate_paths(model, horizon, step, size, rng, extra_times=t_grid)
        cols = np.searchsorted(batch.grid, t_grid)
        vals = np.stack([batch.at_grid(int(c)) for c in cols], axis=1)
        x = vals**m
        return x.sum(axis=0), (x * x).sum(axis=0)

    parts = map_blocks(block, n_paths, seed, block_size)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / n_paths
    var = np.maximum(s2 / n_paths - mean**2, 0.0) * n_paths / max(n_paths - 1, 1)
    return MomentEstimate(t_grid, m, mean, np.sqrt(var / n_paths), n_paths, seed)
